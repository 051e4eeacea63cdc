"""Relaxation (hyperbolic-parabolic) channel model: second-order AHO scheme.

Cell density u and average flux v satisfy

    u_t + v_x = g,    v_t + lam^2 u_x = f - v,

discretized with the AHO stencil: a lam-weighted second difference on u,
centered v-differences weighted (dt/2dx - dt/4lam), (1,2,1)/4 source
averaging on u rows, and a (1,2,1)/4 relaxation of v. The implicit variant
keeps the same stencil with every unknown at the new time level (f and the
relaxation weighting included), which is what drives ||v|| to zero on
stationary states. End rows of v are constraint rows (v = 0 for a sealed
end; the Kedem-Katchalsky flux when a chamber is attached, supplied by the
transmission module).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from chemochip import _ops

__all__ = [
    "HyperbolicState",
    "aho_explicit_step",
    "hyperbolic_operator",
    "hyperbolic_rhs",
    "interface_v0",
    "relax_weights",
    "skew_weights",
]


@dataclass
class HyperbolicState:
    u: np.ndarray
    v: np.ndarray
    lam: float


@lru_cache(maxsize=None)
def relax_weights(n: int) -> sp.csr_matrix:
    """(1,2,1) averaging rows; end rows pair the two nearest nodes (2,2)."""
    W = sp.diags([np.ones(n - 1), 2.0 * np.ones(n), np.ones(n - 1)],
                 [-1, 0, 1], format="lil")
    W[0, 0] = 2.0
    W[0, 1] = 2.0
    W[n - 1, n - 2] = 2.0
    W[n - 1, n - 1] = 2.0
    return W.tocsr()


@lru_cache(maxsize=None)
def skew_weights(n: int) -> sp.csr_matrix:
    """(1,0,-1) rows for the v-equation source; zero end rows."""
    D = sp.diags([np.ones(n - 1), -np.ones(n - 1)], [-1, 1], format="lil")
    D[0, 1] = 0.0
    D[n - 1, n - 2] = 0.0
    return D.tocsr()


def aho_explicit_step(u: np.ndarray, v: np.ndarray, f: np.ndarray,
                      g: np.ndarray, dx: float, dt: float,
                      lam: float) -> tuple[np.ndarray, np.ndarray]:
    """One explicit AHO step on a sealed channel (no-flux ends, v_end = 0).

    Requires the hyperbolic CFL lam*dt/dx <= 1.
    """
    n = u.shape[0]
    cu = lam * dt / (2.0 * dx)
    cv = dt / (2.0 * dx) - dt / (4.0 * lam)
    u_next = (u + cu * (_ops.neumann_laplacian(n) @ u)
              - cv * (_ops.conv_pairing(n) @ v)
              - dt / (4.0 * lam) * (_ops.conv_pairing(n) @ f)
              + dt / 4.0 * (relax_weights(n) @ g))
    v_next = np.zeros_like(v)
    v_next[1:-1] = (v[1:-1]
                    - lam * lam * dt / (2.0 * dx) * (u[2:] - u[:-2])
                    + cu * (v[2:] - 2.0 * v[1:-1] + v[:-2])
                    - dt / 4.0 * (v[:-2] + 2.0 * v[1:-1] + v[2:])
                    + dt / 4.0 * (f[:-2] + 2.0 * f[1:-1] + f[2:])
                    + lam * dt / 4.0 * (g[:-2] - g[2:]))
    return u_next, v_next


@lru_cache(maxsize=None)
def hyperbolic_operator(n: int, dx: float, dt: float, lam: float) -> sp.csr_matrix:
    """Implicit AHO operator H on the stacked vector [u_0..u_{n-1}, v_0..v_{n-1}].

    The step solves (I - H) x^{n+1} = rhs. Rows for v_0 and v_{n-1} are left
    empty: they become either v = 0 (sealed end) or the KK flux constraint
    added by the transmission assembly.
    """
    cu = lam * dt / (2.0 * dx)
    cv = dt / (2.0 * dx) - dt / (4.0 * lam)
    H = sp.lil_matrix((2 * n, 2 * n))
    for i in range(1, n - 1):
        H[i, i - 1] += cu
        H[i, i] += -2.0 * cu
        H[i, i + 1] += cu
        H[i, n + i + 1] += -cv
        H[i, n + i - 1] += cv
        # v rows
        r = n + i
        H[r, i + 1] += -lam * lam * dt / (2.0 * dx)
        H[r, i - 1] += lam * lam * dt / (2.0 * dx)
        H[r, n + i - 1] += cu - dt / 4.0
        H[r, n + i] += -2.0 * cu - dt / 2.0
        H[r, n + i + 1] += cu - dt / 4.0
    # mouth rows for u: one-sided AHO terms
    H[0, 0] += -2.0 * cu
    H[0, 1] += 2.0 * cu
    H[0, n] += -2.0 * cv
    H[0, n + 1] += -2.0 * cv
    H[n - 1, n - 2] += 2.0 * cu
    H[n - 1, n - 1] += -2.0 * cu
    H[n - 1, 2 * n - 2] += 2.0 * cv
    H[n - 1, 2 * n - 1] += 2.0 * cv
    return H.tocsr()


def hyperbolic_rhs(u_n: np.ndarray, v_n: np.ndarray, f: np.ndarray,
                   dx: float, dt: float, lam: float) -> np.ndarray:
    """Base right-hand side of the implicit AHO step (f frozen explicit).

    Source terms in g are layered on top by the solver; v end rows carry no
    state (constraint rows).
    """
    n = u_n.shape[0]
    bu = u_n - dt / (4.0 * lam) * (_ops.conv_pairing(n) @ f)
    bv = np.zeros(n)
    bv[1:-1] = v_n[1:-1] + dt / 4.0 * (f[:-2] + 2.0 * f[1:-1] + f[2:])
    return np.concatenate([bu, bv])


def interface_v0(u0: float, wall_quadrature: float, K: float, sigma: float) -> float:
    """KK flux at an attached channel mouth: v_0 = -K sigma u_0 + K * quadrature."""
    return -K * sigma * u0 + K * wall_quadrature
