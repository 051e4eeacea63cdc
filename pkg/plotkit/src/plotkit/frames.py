"""Loaders for the two CSV contracts.

Snapshot files start with a comment line

    # t=<time> domain=<id> model=<parabolic|hyperbolic>

followed by a csv header (i,j,x,y,species... for 2D domains; i,x,species...
plus vT,vM for hyperbolic 1D domains) and one row per node.

Ledger files are plain csv with columns t, domain, mass_<species>...,
total_<species>... and one row per (time, domain).
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPECIES = ("T", "M", "phi", "omega")

_HEADER_RE = re.compile(r"#\s*t=(?P<t>\S+)\s+domain=(?P<domain>\S+)"
                        r"\s+model=(?P<model>\S+)")


class FrameError(ValueError):
    """Malformed snapshot or ledger file."""


@dataclass
class SnapshotFrame:
    t: float
    domain: str
    model: str
    x: np.ndarray              # 1D axis (2D domains: distinct x values)
    y: np.ndarray | None       # None for channel domains
    fields: dict               # species -> array, shape (nx, ny) or (n,)

    @property
    def is_2d(self) -> bool:
        return self.y is not None


def load_snapshot(path) -> SnapshotFrame:
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline()
        m = _HEADER_RE.match(first)
        if m is None:
            raise FrameError(f"{path}: missing snapshot header line")
        t = float(m.group("t"))
        domain = m.group("domain")
        model = m.group("model")
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "i" not in reader.fieldnames:
            raise FrameError(f"{path}: missing column header")
        rows = list(reader)
    if not rows:
        raise FrameError(f"{path}: no data rows")
    is_2d = "j" in rows[0]
    value_cols = [c for c in rows[0] if c in SPECIES or c in ("vT", "vM")]
    try:
        if is_2d:
            nx = max(int(r["i"]) for r in rows) + 1
            ny = max(int(r["j"]) for r in rows) + 1
            if len(rows) != nx * ny:
                raise FrameError(f"{path}: expected {nx * ny} rows, got {len(rows)}")
            x = np.full(nx, np.nan)
            y = np.full(ny, np.nan)
            fields = {c: np.zeros((nx, ny)) for c in value_cols}
            for r in rows:
                i, j = int(r["i"]), int(r["j"])
                x[i] = float(r["x"])
                y[j] = float(r["y"])
                for c in value_cols:
                    fields[c][i, j] = float(r[c])
            return SnapshotFrame(t, domain, model, x, y, fields)
        n = max(int(r["i"]) for r in rows) + 1
        if len(rows) != n:
            raise FrameError(f"{path}: expected {n} rows, got {len(rows)}")
        x = np.full(n, np.nan)
        fields = {c: np.zeros(n) for c in value_cols}
        for r in rows:
            i = int(r["i"])
            x[i] = float(r["x"])
            for c in value_cols:
                fields[c][i] = float(r[c])
        return SnapshotFrame(t, domain, model, x, None, fields)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FrameError):
            raise
        raise FrameError(f"{path}: {exc}") from exc


@dataclass
class LedgerTable:
    times: np.ndarray
    domains: tuple
    per_domain: dict           # (domain, species) -> array over times
    totals: dict = field(default_factory=dict)  # species -> array

    def drift(self, species: str) -> np.ndarray:
        """Relative deviation of the species total from its initial value."""
        tot = self.totals[species]
        m0 = tot[0]
        dev = np.abs(tot - m0)
        return dev if m0 == 0.0 else dev / abs(m0)


def load_ledger(path) -> LedgerTable:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"t", "domain"} | {f"mass_{s}" for s in SPECIES} \
            | {f"total_{s}" for s in SPECIES}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise FrameError(f"{path}: not a mass ledger")
        rows = list(reader)
    if not rows:
        raise FrameError(f"{path}: empty ledger")
    times: list[float] = []
    domains: list[str] = []
    data: dict = {}
    totals: dict = {s: [] for s in SPECIES}
    try:
        for r in rows:
            t = float(r["t"])
            if not times or t != times[-1]:
                times.append(t)
                for s in SPECIES:
                    totals[s].append(float(r[f"total_{s}"]))
            d = r["domain"]
            if d not in domains:
                domains.append(d)
            for s in SPECIES:
                data.setdefault((d, s), []).append(float(r[f"mass_{s}"]))
    except (TypeError, ValueError) as exc:
        raise FrameError(f"{path}: {exc}") from exc
    nt = len(times)
    for key, series in data.items():
        if len(series) != nt:
            raise FrameError(f"{path}: ragged series for {key}")
    return LedgerTable(
        times=np.asarray(times),
        domains=tuple(domains),
        per_domain={k: np.asarray(v) for k, v in data.items()},
        totals={s: np.asarray(v) for s, v in totals.items()})
