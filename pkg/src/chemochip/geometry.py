"""Chip geometry: chamber/channel layout and the discrete grid built on it.

The left chamber occupies [0, Lx] x [0, Ly]; channels of length L attach to
its right wall on intervals [a_m, b_m]; the optional right chamber occupies
[Lx+L, 2Lx+L] x [0, Ly]. Channel mouths must land exactly on grid lines:
no snapping or interpolation is performed, a misaligned mouth is a
configuration error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChipLayout",
    "DiscreteLayout",
    "GridError",
    "InterfaceMap",
    "ValidationReport",
    "build_grid",
    "validate_layout",
]


class GridError(ValueError):
    """Raised when a grid cannot be built on the requested layout."""


@dataclass(frozen=True)
class ChipLayout:
    """Physical description of the chip.

    channels holds the wall intervals [a_m, b_m], ordered bottom to top.
    K may be a single permeability shared by every channel or a per-channel
    sequence. right_chamber=False leaves the far channel ends unattached
    (single-chamber configurations).
    """

    Lx: float
    Ly: float
    L: float
    channels: tuple[tuple[float, float], ...]
    K: float | tuple[float, ...] = 1.0
    right_chamber: bool = True

    def __post_init__(self):
        object.__setattr__(
            self, "channels", tuple((float(a), float(b)) for a, b in self.channels)
        )
        if not np.isscalar(self.K):
            object.__setattr__(self, "K", tuple(float(k) for k in self.K))

    @property
    def sigma(self) -> float:
        a, b = self.channels[0]
        return b - a

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def K_of(self, m: int) -> float:
        if np.isscalar(self.K):
            return float(self.K)
        return self.K[m]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    errors: tuple[str, ...] = ()


def validate_layout(layout: ChipLayout) -> ValidationReport:
    """Check the layout invariants; collects every violation, not just the first."""
    errors: list[str] = []
    if layout.Lx <= 0 or layout.Ly <= 0 or layout.L <= 0:
        errors.append("chamber and channel dimensions must be positive")
    if layout.n_channels == 0:
        errors.append("at least one channel is required")
        return ValidationReport(False, tuple(errors))
    if not np.isscalar(layout.K) and len(layout.K) != layout.n_channels:
        errors.append("per-channel K length does not match channel count")

    sigma = layout.sigma
    for m, (a, b) in enumerate(layout.channels):
        if b <= a:
            errors.append(f"channel {m}: empty or reversed interval [{a}, {b}]")
        elif abs((b - a) - sigma) > 1e-12 * max(1.0, sigma):
            errors.append(f"channel {m}: non-uniform width {b - a} != {sigma}")
    a0 = layout.channels[0][0]
    if a0 <= 0:
        errors.append(f"channel 0: lower end {a0} must be strictly inside (0, Ly)")
    if layout.channels[-1][1] >= layout.Ly:
        errors.append(
            f"channel {layout.n_channels - 1}: upper end "
            f"{layout.channels[-1][1]} must stay below Ly={layout.Ly}"
        )
    for m in range(layout.n_channels - 1):
        if layout.channels[m][1] >= layout.channels[m + 1][0]:
            errors.append(f"channel {m}: overlap with channel {m + 1}")
    return ValidationReport(not errors, tuple(errors))


def _as_multiple(value: float, step: float) -> int | None:
    """Integer n with n*step == value up to relative round-off, else None."""
    n = int(round(value / step))
    if n >= 0 and abs(n * step - value) <= 1e-9 * max(abs(value), step):
        return n
    return None


@dataclass(frozen=True)
class InterfaceMap:
    """One channel mouth as seen from one chamber wall."""

    m: int
    side: str  # "left" | "right" chamber
    i_wall: int  # wall column index in that chamber
    j_a: int
    j_b: int
    sigma: float
    K: float

    @property
    def j_count(self) -> int:
        return self.j_b - self.j_a + 1

    def weights(self) -> np.ndarray:
        """Trapezoidal weights over the j-range (1/2 at both ends)."""
        w = np.ones(self.j_count)
        w[0] = 0.5
        w[-1] = 0.5
        return w


@dataclass(frozen=True)
class DiscreteLayout:
    """Grid built on a validated ChipLayout.

    Chamber nodes are indexed i=0..Nx+1, j=0..Ny+1 with (Nx+1)dx=Lx and
    (Ny+1)dy=Ly; each channel has nodes i=0..N+1 with (N+1)dx_channel=L.
    """

    layout: ChipLayout
    dx: float
    dy: float
    dt: float
    dx_channel: float
    Nx: int
    Ny: int
    N: int
    j_ranges: tuple[tuple[int, int], ...] = field(default=())

    def interface_indices(self, m: int, side: str) -> InterfaceMap:
        if not 0 <= m < self.layout.n_channels:
            raise IndexError(f"channel index {m} out of range")
        if side not in ("left", "right"):
            raise ValueError(f"unknown chamber side {side!r}")
        if side == "right" and not self.layout.right_chamber:
            raise ValueError("layout has no right chamber")
        j_a, j_b = self.j_ranges[m]
        i_wall = self.Nx + 1 if side == "left" else 0
        return InterfaceMap(
            m=m,
            side=side,
            i_wall=i_wall,
            j_a=j_a,
            j_b=j_b,
            sigma=self.layout.sigma,
            K=self.layout.K_of(m),
        )

    def chamber_coords(self, side: str) -> tuple[np.ndarray, np.ndarray]:
        """Global (x, y) node coordinates of one chamber."""
        lay = self.layout
        x0 = 0.0 if side == "left" else lay.Lx + lay.L
        x = x0 + self.dx * np.arange(self.Nx + 2)
        y = self.dy * np.arange(self.Ny + 2)
        return x, y

    def channel_coords(self) -> np.ndarray:
        """Global x coordinates of channel nodes (same for every channel)."""
        return self.layout.Lx + self.dx_channel * np.arange(self.N + 2)


def build_grid(
    layout: ChipLayout,
    dx: float,
    dy: float,
    dt: float,
    dx_channel: float | None = None,
) -> DiscreteLayout:
    """Discretize the layout; every physical length must be grid-commensurate."""
    report = validate_layout(layout)
    if not report.ok:
        raise GridError("; ".join(report.errors))
    if dx <= 0 or dy <= 0 or dt <= 0:
        raise GridError("dx, dy, dt must be positive")
    if dx_channel is None:
        dx_channel = dx

    nx = _as_multiple(layout.Lx, dx)
    ny = _as_multiple(layout.Ly, dy)
    nc = _as_multiple(layout.L, dx_channel)
    if nx is None or nx < 2:
        raise GridError(f"Lx={layout.Lx} is not a multiple (>=2) of dx={dx}")
    if ny is None or ny < 2:
        raise GridError(f"Ly={layout.Ly} is not a multiple (>=2) of dy={dy}")
    if nc is None or nc < 2:
        raise GridError(f"L={layout.L} is not a multiple (>=2) of dx_channel={dx_channel}")

    j_ranges = []
    for m, (a, b) in enumerate(layout.channels):
        j_a = _as_multiple(a, dy)
        j_b = _as_multiple(b, dy)
        if j_a is None or j_b is None:
            raise GridError(f"channel {m} mouth [{a}, {b}] not aligned to dy={dy}")
        if j_b - j_a < 1:
            raise GridError(f"channel {m} mouth narrower than one dy")
        j_ranges.append((j_a, j_b))
    # adjacent mouths sharing a wall node would double-count the exchange
    for m in range(len(j_ranges) - 1):
        if j_ranges[m][1] >= j_ranges[m + 1][0]:
            raise GridError(f"channels {m} and {m + 1} share a wall grid point")

    return DiscreteLayout(
        layout=layout,
        dx=dx,
        dy=dy,
        dt=dt,
        dx_channel=dx_channel,
        Nx=nx - 1,
        Ny=ny - 1,
        N=nc - 1,
        j_ranges=tuple(j_ranges),
    )
