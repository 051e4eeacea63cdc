"""Trapezoidal quadratures, the mass ledger, and positivity monitoring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MassLedger",
    "PositivityReport",
    "mass_drift",
    "positivity_monitor",
    "total_mass",
    "trap_1d",
    "trap_2d",
]

SPECIES = ("T", "M", "phi", "omega")


def trap_1d(values: np.ndarray, dx: float) -> float:
    """Trapezoidal integral of nodal values on a uniform 1D grid."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 2:
        raise ValueError("trap_1d needs at least two nodes")
    return dx * (0.5 * v[0] + v[1:-1].sum() + 0.5 * v[-1])


def trap_2d(values: np.ndarray, dx: float, dy: float) -> float:
    """Tensor-product trapezoidal integral on a uniform 2D grid."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 2 or v.shape[1] < 2:
        raise ValueError("trap_2d needs at least two nodes per direction")
    wx = np.ones(v.shape[0])
    wx[0] = wx[-1] = 0.5
    wy = np.ones(v.shape[1])
    wy[0] = wy[-1] = 0.5
    return dx * dy * float(wx @ v @ wy)


@dataclass
class MassLedger:
    """Per-domain and total trapezoidal masses per species over time."""

    times: list = field(default_factory=list)
    per_domain: dict = field(default_factory=dict)  # (domain, species) -> [mass]
    totals: dict = field(default_factory=lambda: {s: [] for s in SPECIES})

    def append(self, t: float, entry: dict) -> None:
        """entry: {domain: {species: mass}}."""
        self.times.append(t)
        for s in SPECIES:
            total = 0.0
            for domain, masses in entry.items():
                self.per_domain.setdefault((domain, s), []).append(masses[s])
                total += masses[s]
            self.totals[s].append(total)

    def __len__(self) -> int:
        return len(self.times)


def total_mass(state, grid) -> dict:
    """One ledger entry: {domain: {species: trapezoidal mass}}."""
    entry: dict = {}
    for domain in state.domains():
        masses = {}
        for s in SPECIES:
            v = state.field(domain, s)
            if v.ndim == 2:
                masses[s] = trap_2d(v, grid.dx, grid.dy)
            else:
                masses[s] = trap_1d(v, grid.dx_channel)
        entry[domain] = masses
    return entry


def mass_drift(ledger: MassLedger, species: str) -> float:
    """Max relative deviation of the species total from its initial value.

    A zero initial mass falls back to the absolute deviation.
    """
    series = np.asarray(ledger.totals[species], dtype=float)
    if series.size == 0:
        raise ValueError("empty ledger")
    m0 = series[0]
    dev = np.abs(series - m0).max()
    if m0 == 0.0:
        return float(dev)
    return float(dev / abs(m0))


@dataclass(frozen=True)
class PositivityReport:
    ok: bool
    min_value: float
    species: str = ""
    domain: str = ""
    location: tuple = ()


def positivity_monitor(state, tolerance: float = 1e-13) -> PositivityReport:
    """Most negative density over all domains; trips below -tolerance."""
    worst = np.inf
    worst_species = ""
    worst_domain = ""
    worst_loc: tuple = ()
    for domain in state.domains():
        for s in SPECIES:
            v = state.field(domain, s)
            idx = np.unravel_index(np.argmin(v), v.shape)
            if v[idx] < worst:
                worst = float(v[idx])
                worst_species = s
                worst_domain = domain
                worst_loc = idx
    return PositivityReport(
        ok=worst >= -tolerance,
        min_value=worst,
        species=worst_species,
        domain=worst_domain,
        location=worst_loc,
    )
