"""Channel (1D) discretization for the doubly-parabolic model.

Same structure as the chamber scheme: an implicit half-step operator P with
mirror-ghost end rows, explicit convection/viscosity terms, and explicit
reference steppers. The explicit stepper also offers the naive copy-Neumann
end condition (u_0 = u_1) used to demonstrate its mass drift.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from chemochip import _ops
from chemochip.model import ModelParams, chemotactic_sensitivity

__all__ = [
    "Field1D",
    "channel_operator",
    "chemotactic_flux_1d",
    "cn_step_phi_1d",
    "cn_step_u_1d",
    "explicit_step_phi_1d",
    "explicit_step_u_1d",
    "explicit_terms_1d",
    "imex_terms_1d",
]


@dataclass
class Field1D:
    values: np.ndarray
    species: str = ""
    channel: int = 0


def chemotactic_flux_1d(u: np.ndarray, phi: np.ndarray, dx: float,
                        p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """f = chi(u, phi) d_x phi and theta = chi |d_x phi| on channel nodes."""
    chi = chemotactic_sensitivity(u, phi, p)
    phi_x = (_ops.gradient(phi.shape[0]) @ phi) / dx
    return chi * phi_x, chi * np.abs(phi_x)


@lru_cache(maxsize=None)
def channel_operator(n: int, dx: float, dt: float, D: float) -> sp.csr_matrix:
    """Implicit half-step diffusion operator on n channel nodes."""
    return (D * dt / (2.0 * dx * dx) * _ops.neumann_laplacian(n)).tocsr()


def explicit_terms_1d(f: np.ndarray, dx: float, dt: float) -> np.ndarray:
    """Convection terms: centered inside, paired (f_0 + f_1) at the ends."""
    return -dt / (2.0 * dx) * (_ops.conv_pairing(f.shape[0]) @ f)


def imex_terms_1d(f: np.ndarray, theta: np.ndarray, dx: float, dt: float,
                  viscosity: bool = True) -> np.ndarray:
    """Explicit part of the 1D IMEX step (full-strength convection)."""
    E = explicit_terms_1d(f, dx, dt)
    if viscosity:
        E = E - dt / (2.0 * dx) * (_ops.neumann_laplacian(theta.shape[0]) @ theta)
    return E


def _apply_P(v: np.ndarray, dx: float, dt: float, D: float) -> np.ndarray:
    return channel_operator(v.shape[0], dx, dt, D) @ v


def cn_step_u_1d(u_n: np.ndarray, u_np1: np.ndarray, f: np.ndarray,
                 theta: np.ndarray, g_n: np.ndarray, g_np1: np.ndarray,
                 dx: float, dt: float, D: float,
                 viscosity: bool = True) -> np.ndarray:
    """Residual of the 1D IMEX relation for a cell density (standalone ends)."""
    E = imex_terms_1d(f, theta, dx, dt, viscosity)
    return (u_np1 - u_n - _apply_P(u_n, dx, dt, D) - _apply_P(u_np1, dx, dt, D)
            - E - 0.5 * dt * (g_n + g_np1))


def cn_step_phi_1d(phi_n: np.ndarray, phi_np1: np.ndarray, u_n: np.ndarray,
                   u_np1: np.ndarray, dx: float, dt: float, D: float,
                   a: float, b: float) -> np.ndarray:
    """Residual of the 1D CN relation for a chemoattractant."""
    src = 0.5 * dt * (a * (u_n + u_np1) - b * (phi_n + phi_np1))
    return (phi_np1 - phi_n - _apply_P(phi_n, dx, dt, D)
            - _apply_P(phi_np1, dx, dt, D) - src)


def explicit_step_u_1d(u: np.ndarray, f: np.ndarray, g: np.ndarray,
                       dx: float, dt: float, D: float,
                       bc: str = "mass") -> np.ndarray:
    """One fully explicit step on a standalone channel.

    bc="mass" uses the conservative paired end conditions; bc="copy" updates
    the interior only and copies the neighbors into the end nodes (the naive
    Neumann discretization, which leaks mass).
    """
    out = u + 2.0 * _apply_P(u, dx, dt, D) + explicit_terms_1d(f, dx, dt) + dt * g
    if bc == "copy":
        out[0] = out[1]
        out[-1] = out[-2]
    elif bc != "mass":
        raise ValueError(f"unknown end condition {bc!r}")
    return out


def explicit_step_phi_1d(phi: np.ndarray, u: np.ndarray, dx: float, dt: float,
                         D: float, a: float, b: float) -> np.ndarray:
    """One fully explicit step for a channel chemoattractant."""
    return phi + 2.0 * _apply_P(phi, dx, dt, D) + dt * (a * u - b * phi)
