"""One-dimensional stencil matrices shared by every scheme.

All three operators annihilate the trapezoidal weight vector
w = (1/2, 1, ..., 1, 1/2) from the left (w^T A = 0), which is what makes the
assembled schemes conserve the discrete mass without any per-scheme bookkeeping:

- neumann_laplacian: second difference with doubled one-sided end rows,
  equivalent to eliminating a mirror ghost node through the second-order
  flux condition.
- conv_pairing: centered first difference with paired-value end rows
  (f_0 + f_1 at the left end, -(f_N + f_{N+1}) at the right end).
- gradient: plain centered first derivative, one-sided first order at the
  ends; used only to build chemotactic fluxes, not subject to w^T A = 0.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

__all__ = ["conv_pairing", "gradient", "neumann_laplacian"]


@lru_cache(maxsize=None)
def neumann_laplacian(n: int) -> sp.csr_matrix:
    """n x n second-difference matrix with mirror-ghost end rows.

    Row 0 is 2*(z_1 - z_0), row n-1 is 2*(z_{n-2} - z_{n-1}); interior rows
    are z_{i-1} - 2 z_i + z_{i+1}.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    A = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    A[0, 1] = 2.0
    A[n - 1, n - 2] = 2.0
    return A.tocsr()


@lru_cache(maxsize=None)
def conv_pairing(n: int) -> sp.csr_matrix:
    """n x n centered-difference matrix with paired end rows.

    (A z)_0 = 2 (z_0 + z_1), (A z)_{n-1} = -2 (z_{n-2} + z_{n-1}), interior
    (A z)_i = z_{i+1} - z_{i-1}. Meant to be scaled by -dt/(2 dx).
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    off = np.ones(n - 1)
    A = sp.diags([-off, off], [-1, 1], format="lil")
    A[0, 0] = 2.0
    A[0, 1] = 2.0
    A[n - 1, n - 2] = -2.0
    A[n - 1, n - 1] = -2.0
    return A.tocsr()


@lru_cache(maxsize=None)
def gradient(n: int) -> sp.csr_matrix:
    """n x n first-derivative stencil (multiply result by 1/dx).

    Centered /2 in the interior, one-sided at the two end rows.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    off = 0.5 * np.ones(n - 1)
    A = sp.diags([-off, off], [-1, 1], format="lil")
    A[0, 0] = -1.0
    A[0, 1] = 1.0
    A[n - 1, n - 2] = -1.0
    A[n - 1, n - 1] = 1.0
    return A.tocsr()
