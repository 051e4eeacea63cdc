"""Chamber (2D) discretization: chemotactic fluxes, the implicit diffusion
operator, convection/viscosity terms, and the explicit reference steppers.

Index convention: arrays are (Nx+2, Ny+2) with axis 0 = x, axis 1 = y.
The implicit operator P collects everything one Crank-Nicolson half-step of
diffusion does to a single time level, so the scheme reads

    u^{n+1} = u^n + P u^n + P u^{n+1} + E(f, theta) + source terms,

with E explicit in time. Boundary rows of P use the doubled one-sided
(mirror ghost) closure, which keeps w^T P = 0 against the trapezoidal
weights and hence conserves mass exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from chemochip import _ops
from chemochip.model import ModelParams, chemotactic_sensitivity

__all__ = [
    "Field2D",
    "chamber_operator",
    "chemotactic_flux_2d",
    "cn_step_phi_2d",
    "cn_step_u_2d",
    "explicit_step_phi_2d",
    "explicit_step_u_2d",
    "explicit_terms_2d",
    "imex_terms_2d",
]


@dataclass
class Field2D:
    values: np.ndarray
    species: str = ""
    domain: str = ""


def chemotactic_flux_2d(u: np.ndarray, phi: np.ndarray, dx: float, dy: float,
                        p: ModelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chemotactic flux components and the artificial-viscosity field.

    f = chi(u, phi) grad(phi), theta = chi(u, phi) |grad(phi)|; centered
    differences inside, one-sided first order on the outermost rows/columns.
    """
    nx, ny = phi.shape
    chi = chemotactic_sensitivity(u, phi, p)
    phi_x = (_ops.gradient(nx) @ phi) / dx
    phi_y = (phi @ _ops.gradient(ny).T.tocsr()) / dy
    fx = chi * phi_x
    fy = chi * phi_y
    theta = chi * np.hypot(phi_x, phi_y)
    return fx, fy, theta


@lru_cache(maxsize=None)
def chamber_operator(nx: int, ny: int, dx: float, dy: float, dt: float,
                     D: float) -> sp.csr_matrix:
    """Implicit half-step diffusion operator P on the flattened (nx*ny) grid.

    Flattening is row-major with y fastest: index = i*ny + j.
    """
    mu_x = D * dt / (2.0 * dx * dx)
    mu_y = D * dt / (2.0 * dy * dy)
    Lx = _ops.neumann_laplacian(nx)
    Ly = _ops.neumann_laplacian(ny)
    P = sp.kron(mu_x * Lx, sp.identity(ny)) + sp.kron(sp.identity(nx), mu_y * Ly)
    return P.tocsr()


def explicit_terms_2d(fx: np.ndarray, fy: np.ndarray, dx: float, dy: float,
                      dt: float) -> np.ndarray:
    """Convection contribution of the fully explicit scheme (full strength)."""
    nx, ny = fx.shape
    Gx = _ops.conv_pairing(nx)
    Gy = _ops.conv_pairing(ny)
    return -dt / (2.0 * dx) * (Gx @ fx) - dt / (2.0 * dy) * (fy @ Gy.T.tocsr())


def imex_terms_2d(fx: np.ndarray, fy: np.ndarray, theta: np.ndarray,
                  dx: float, dy: float, dt: float,
                  viscosity: bool = True) -> np.ndarray:
    """Explicit part of the IMEX step: half-strength convection plus the
    artificial-viscosity correction.

    The interior convection weight is dt/4 per direction (half the explicit
    scheme); the boundary rows are halved accordingly so the pairing still
    telescopes against the trapezoidal weights.
    """
    E = 0.5 * explicit_terms_2d(fx, fy, dx, dy, dt)
    if viscosity:
        nx, ny = theta.shape
        Lx = _ops.neumann_laplacian(nx)
        Ly = _ops.neumann_laplacian(ny)
        E = E - dt / (2.0 * dx) * (Lx @ theta) - dt / (2.0 * dy) * (theta @ Ly.T.tocsr())
    return E


def _apply_P(field: np.ndarray, dx: float, dy: float, dt: float, D: float) -> np.ndarray:
    nx, ny = field.shape
    P = chamber_operator(nx, ny, dx, dy, dt, D)
    return (P @ field.reshape(-1)).reshape(nx, ny)


def cn_step_u_2d(u_n: np.ndarray, u_np1: np.ndarray, fx: np.ndarray,
                 fy: np.ndarray, theta: np.ndarray, g_n: np.ndarray,
                 g_np1: np.ndarray, dx: float, dy: float, dt: float, D: float,
                 viscosity: bool = True) -> np.ndarray:
    """Residual of the IMEX relation for a cell density over the full chamber.

    Zero at the exact step: u^{n+1} - u^n - P(u^n + u^{n+1}) - E - dt/2 (g^n + g^{n+1}).
    """
    E = imex_terms_2d(fx, fy, theta, dx, dy, dt, viscosity)
    return (u_np1 - u_n - _apply_P(u_n, dx, dy, dt, D) - _apply_P(u_np1, dx, dy, dt, D)
            - E - 0.5 * dt * (g_n + g_np1))


def cn_step_phi_2d(phi_n: np.ndarray, phi_np1: np.ndarray, u_n: np.ndarray,
                   u_np1: np.ndarray, dx: float, dy: float, dt: float, D: float,
                   a: float, b: float) -> np.ndarray:
    """Residual of the CN relation for a chemoattractant (source a*u - b*phi)."""
    src = 0.5 * dt * (a * (u_n + u_np1) - b * (phi_n + phi_np1))
    return (phi_np1 - phi_n - _apply_P(phi_n, dx, dy, dt, D)
            - _apply_P(phi_np1, dx, dy, dt, D) - src)


def explicit_step_u_2d(u: np.ndarray, fx: np.ndarray, fy: np.ndarray,
                       g: np.ndarray, dx: float, dy: float, dt: float,
                       D: float) -> np.ndarray:
    """One step of the fully explicit mass-preserving scheme (no viscosity).

    Subject to the 2D parabolic CFL condition; used as reference and in
    property tests, not by the production stepper.
    """
    return u + 2.0 * _apply_P(u, dx, dy, dt, D) + explicit_terms_2d(fx, fy, dx, dy, dt) + dt * g


def explicit_step_phi_2d(phi: np.ndarray, u: np.ndarray, dx: float, dy: float,
                         dt: float, D: float, a: float, b: float) -> np.ndarray:
    """One fully explicit step for a chemoattractant."""
    return phi + 2.0 * _apply_P(phi, dx, dy, dt, D) + dt * (a * u - b * phi)
