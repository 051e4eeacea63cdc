"""Kedem-Katchalsky transmission between chambers and channels.

A membrane of permeability K sits at each channel mouth; the normal flux
through it is K times the concentration jump. On the chamber side every wall
node in the mouth range exchanges with the channel end value; on the channel
side the end node exchanges with the trapezoidal average of the wall values.
The trapezoidal half-weights at the two edge nodes of the mouth range appear
on both sides, which is exactly what makes the exchange cancel in the global
mass budget.

The entry builders below add the per-half-step coefficients into the
implicit operator P (applied at both Crank-Nicolson levels) or, for the
hyperbolic flux constraint, into the fully implicit operator H.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chemochip.geometry import DiscreteLayout, InterfaceMap
from chemochip.model import ModelParams

__all__ = [
    "InterfaceMap",
    "KKReport",
    "add_flux_constraint",
    "add_mouth_coupling",
    "add_wall_coupling",
    "ghost_value_1d",
    "ghost_value_2d",
    "kk_ratio",
    "kk_ratio_check",
    "wall_quadrature",
]


def wall_quadrature(wall_values: np.ndarray, dy: float) -> float:
    """Trapezoidal integral of the chamber trace over the mouth range."""
    v = np.asarray(wall_values, dtype=float)
    if v.shape[0] < 2:
        raise ValueError("mouth range must span at least two wall nodes")
    return dy * (0.5 * v[0] + v[1:-1].sum() + 0.5 * v[-1])


def ghost_value_2d(u_inner: float, u_wall: float, u_mouth: float, K: float,
                   D: float, dx: float, flux: float = 0.0) -> float:
    """Eliminated ghost node outside a chamber wall with a membrane on it.

    Second-order closure of D du/dn = K (u_mouth - u_wall) + flux; the
    resulting wall row is the doubled one-sided difference plus the K term.
    """
    return u_inner + (2.0 * dx / D) * (K * (u_mouth - u_wall) + flux)


def ghost_value_1d(u_next: float, u_mouth: float, quadrature: float, K: float,
                   sigma: float, D: float, dx: float,
                   flux: float = 0.0) -> float:
    """Eliminated ghost node beyond a channel mouth.

    u_next is the first interior node; quadrature is the wall_quadrature of
    the chamber trace. Closure of D du/dx = K sigma u_mouth - K * quadrature
    + flux at the left mouth (mirror for the right one).
    """
    return u_next + (2.0 * dx / D) * (-K * sigma * u_mouth + K * quadrature
                                      - flux)


def add_wall_coupling(P, iface: InterfaceMap, dt: float, dx: float, dy: float,
                      wall_idx, mouth_idx: int) -> None:
    """K exchange entries for the chamber wall rows (per half step).

    Each wall node j in the mouth range gains w_j K dt/dx (u_mouth - u_j)
    with the trapezoidal weight w_j.
    """
    c = iface.K * dt / dx
    for w, r in zip(iface.weights(), wall_idx):
        P[r, mouth_idx] += w * c
        P[r, r] -= w * c


def add_mouth_coupling(P, iface: InterfaceMap, dt: float, dx_channel: float,
                       dy: float, mouth_idx: int, wall_idx) -> None:
    """K exchange entries for the channel end row (per half step).

    The end node gains K dt/dx_c (dy sum_j w_j u_j - sigma u_mouth); same
    form for the parabolic end row and the hyperbolic u end row.
    """
    c = iface.K * dt / dx_channel
    P[mouth_idx, mouth_idx] -= c * iface.sigma
    for w, r in zip(iface.weights(), wall_idx):
        P[mouth_idx, r] += c * dy * w


def add_flux_constraint(H, iface: InterfaceMap, dy: float, mouth_idx: int,
                        v_idx: int, wall_idx, sign: float) -> None:
    """Constraint row tying the hyperbolic end flux to the membrane law.

    sign=+1 at the left mouth (v_0 = -K sigma u_0 + K quad), sign=-1 at the
    right one (outward normal flips). The row lives in H so that (I - H)
    enforces v - rhs = 0 fully implicitly.
    """
    H[v_idx, mouth_idx] -= sign * iface.K * iface.sigma
    for w, r in zip(iface.weights(), wall_idx):
        H[v_idx, r] += sign * iface.K * dy * w


def kk_ratio(K: float, dt: float, dx: float, sigma: float) -> float:
    """Dimensionless strength K dt sigma / dx of the mouth exchange term."""
    return K * dt * sigma / dx


@dataclass(frozen=True)
class KKReport:
    ok: bool
    entries: tuple  # (name, value, ok)


def kk_ratio_check(grid: DiscreteLayout, p: ModelParams | None = None,
                   threshold: float = 0.5) -> KKReport:
    """Flag transmission terms that dominate their row at the current step.

    Checks, per channel, the wall-row coefficient K dt/dx and the mouth-row
    coefficient K dt sigma / dx_c against the threshold. Advisory: a failure
    signals a stiff membrane that the fixed-point split may resolve poorly.
    """
    entries = []
    sigma = grid.layout.sigma
    for m in range(grid.layout.n_channels):
        K = abs(grid.layout.K_of(m))
        if K == 0.0:
            continue
        r_wall = K * grid.dt / grid.dx
        r_mouth = kk_ratio(K, grid.dt, grid.dx_channel, sigma)
        entries.append((f"channel_{m}_wall", r_wall, r_wall <= threshold))
        entries.append((f"channel_{m}_mouth", r_mouth, r_mouth <= threshold))
    return KKReport(ok=all(e[2] for e in entries), entries=tuple(entries))
