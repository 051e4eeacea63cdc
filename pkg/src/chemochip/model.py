"""Coefficient functions of the biological model and the analytic
monotonicity safeguards.

Species: T (tumor cells), M (immune cells), phi (chemoattractant produced by
T, sensed by M), omega (chemokine produced by M, killing T). All parameters
are plain simulation units.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import exp, sqrt

import numpy as np

__all__ = [
    "ModelParams",
    "MonotonicityReport",
    "chemotactic_sensitivity",
    "drug_rate",
    "kill_rate",
    "monotonicity_check",
]

SPECIES = ("T", "M", "phi", "omega")


@dataclass(frozen=True)
class ModelParams:
    """All model coefficients; defaults are the reference parameter set."""

    D_T: float = 5.6e1
    D_M: float = 9.0e2
    D_phi: float = 2.0e2
    D_omega: float = 2.0e2
    alpha_phi: float = 1.0e-1
    beta_phi: float = 1.0e-4
    alpha_omega: float = 1.0e-1
    beta_omega: float = 1.0e-4
    k1: float = 3.9e-9
    k2: float = 5.0e-6
    gamma: float = 2.0
    k_omega: float = 1.0
    K_T: float = 0.0
    alpha_T: float = 0.0
    K_M: float = 0.0
    alpha_M: float = 0.0
    lambda_T_wave: float | None = None  # None -> sqrt(D_T)
    lambda_M_wave: float | None = None  # None -> sqrt(D_M)

    def __post_init__(self):
        for name in ("D_T", "D_M", "D_phi", "D_omega"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.k2 <= 0:
            raise ValueError("k2 must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    @property
    def wave_speed_T(self) -> float:
        lam = self.lambda_T_wave if self.lambda_T_wave is not None else sqrt(self.D_T)
        if lam <= 0:
            raise ValueError("wave speed for T must be positive")
        return lam

    @property
    def wave_speed_M(self) -> float:
        lam = self.lambda_M_wave if self.lambda_M_wave is not None else sqrt(self.D_M)
        if lam <= 0:
            raise ValueError("wave speed for M must be positive")
        return lam

    def diffusivity(self, species: str) -> float:
        return {
            "T": self.D_T,
            "M": self.D_M,
            "phi": self.D_phi,
            "omega": self.D_omega,
        }[species]

    def zero_sources(self) -> "ModelParams":
        """Copy with every reaction/source coefficient switched off."""
        return replace(
            self,
            alpha_phi=0.0,
            alpha_omega=0.0,
            k_omega=0.0,
            K_T=0.0,
            K_M=0.0,
            beta_phi=0.0,
            beta_omega=0.0,
        )


def chemotactic_sensitivity(M, phi, p: ModelParams):
    """chi(M, phi) = k1 M / (k2 + phi)^gamma; accepts scalars or arrays."""
    denom = np.asarray(p.k2 + np.asarray(phi, dtype=float))
    if np.any(denom <= 0):
        raise ValueError("chemoattractant below -k2: chi undefined")
    return p.k1 * np.asarray(M, dtype=float) / denom**p.gamma


def kill_rate(omega, p: ModelParams):
    """lambda_T(omega) = k_omega * omega / (1 + omega), bounded by k_omega."""
    om = np.asarray(omega, dtype=float)
    if np.any(om == -1.0):
        raise ValueError("omega = -1 is a pole of the kill rate")
    return p.k_omega * om / (1.0 + om)


def drug_rate(t: float, species: str, p: ModelParams) -> float:
    """Drug-induced decay rate k_T(t) = K_T exp(-alpha_T t), likewise for M."""
    if species == "T":
        return p.K_T * exp(-p.alpha_T * t)
    if species == "M":
        return p.K_M * exp(-p.alpha_M * t)
    raise ValueError(f"drug rate defined for T and M only, got {species!r}")


@dataclass(frozen=True)
class MonotonicityReport:
    ok: bool
    chemo_margin: float  # max over grid of chi/M-normalized |dphi/dx| minus sqrt(D_M)
    kill_margin: float  # max of lambda_T(omega)*T minus 1
    worst_chemo: tuple = ()
    worst_kill: tuple = ()


def _phi_dx(phi: np.ndarray, dx: float) -> np.ndarray:
    """Centered d/dx along axis 0, one-sided at the ends."""
    out = np.empty_like(phi, dtype=float)
    out[1:-1] = (phi[2:] - phi[:-2]) / (2.0 * dx)
    out[0] = (phi[1] - phi[0]) / dx
    out[-1] = (phi[-1] - phi[-2]) / dx
    return out


def monotonicity_check(state, grid, p: ModelParams) -> MonotonicityReport:
    """Evaluate the two pointwise positivity conditions over every domain.

    Condition 1: (k1/(k2+phi)^gamma) |d_x phi| <= sqrt(D_M).
    Condition 2: (k_omega omega/(1+omega)) T <= 1.
    Both are diagnostics; a failure does not stop the step by itself.
    """
    chemo_worst = -np.inf
    chemo_loc: tuple = ()
    kill_worst = -np.inf
    kill_loc: tuple = ()
    lim = sqrt(p.D_M)

    for domain in state.domains():
        phi = state.field(domain, "phi")
        T = state.field(domain, "T")
        omega = state.field(domain, "omega")
        h = grid.dx if phi.ndim == 2 else grid.dx_channel
        lhs1 = p.k1 / (p.k2 + phi) ** p.gamma * np.abs(_phi_dx(phi, h))
        idx = np.unravel_index(np.argmax(lhs1), lhs1.shape)
        if lhs1[idx] - lim > chemo_worst:
            chemo_worst = lhs1[idx] - lim
            chemo_loc = (domain, *idx)
        lhs2 = kill_rate(omega, p) * T
        idx = np.unravel_index(np.argmax(lhs2), lhs2.shape)
        if lhs2[idx] - 1.0 > kill_worst:
            kill_worst = lhs2[idx] - 1.0
            kill_loc = (domain, *idx)

    return MonotonicityReport(
        ok=(chemo_worst <= 0.0 and kill_worst <= 0.0),
        chemo_margin=chemo_worst,
        kill_margin=kill_worst,
        worst_chemo=chemo_loc,
        worst_kill=kill_loc,
    )
