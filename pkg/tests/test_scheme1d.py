import numpy as np
import pytest

from chemochip.diagnostics import trap_1d
from chemochip.model import ModelParams
from chemochip.scheme1d_parabolic import (chemotactic_flux_1d,
                                          cn_step_phi_1d, cn_step_u_1d,
                                          explicit_step_phi_1d,
                                          explicit_step_u_1d, imex_terms_1d)

RNG = np.random.default_rng(99)


def brute_force_explicit_1d(u, f, g, dx, dt, D):
    n = u.shape[0]
    out = np.empty_like(u)
    mu = D * dt / dx**2
    for i in range(n):
        if i == 0:
            lap = 2.0 * (u[1] - u[0])
            conv = 2.0 * (f[0] + f[1])
        elif i == n - 1:
            lap = 2.0 * (u[n - 2] - u[n - 1])
            conv = -2.0 * (f[n - 2] + f[n - 1])
        else:
            lap = u[i - 1] - 2.0 * u[i] + u[i + 1]
            conv = f[i + 1] - f[i - 1]
        out[i] = u[i] + mu * lap - dt / (2.0 * dx) * conv + dt * g[i]
    return out


def test_explicit_step_matches_brute_force():
    n = 5
    u = RNG.random(n)
    f = RNG.standard_normal(n)
    g = RNG.standard_normal(n)
    got = explicit_step_u_1d(u, f, g, 0.1, 1e-3, 0.8)
    want = brute_force_explicit_1d(u, f, g, 0.1, 1e-3, 0.8)
    assert np.max(np.abs(got - want)) <= 1e-14


def test_mass_conserving_vs_copy_endpoints():
    n, dx, dt, D = 12, 0.1, 1e-4, 1.0
    u0 = np.exp(-np.linspace(-2.0, 2.0, n) ** 2)
    z = np.zeros(n)
    m0 = trap_1d(u0, dx)

    u = u0.copy()
    for _ in range(2000):
        u = explicit_step_u_1d(u, z, z, dx, dt, D, bc="mass")
    assert abs(trap_1d(u, dx) - m0) / m0 <= 1e-12

    u = u0.copy()
    for _ in range(2000):
        u = explicit_step_u_1d(u, z, z, dx, dt, D, bc="copy")
    assert abs(trap_1d(u, dx) - m0) / m0 >= 1e-6

    with pytest.raises(ValueError):
        explicit_step_u_1d(u0, z, z, dx, dt, D, bc="bogus")


def test_positivity_under_cfl():
    n, dx, D = 20, 0.1, 1.0
    dt = 0.5 * dx**2 / D  # exactly the explicit limit
    u = RNG.random(n)
    z = np.zeros(n)
    for _ in range(200):
        u = explicit_step_u_1d(u, z, z, dx, dt, D)
        assert np.all(u >= -1e-15)


def test_imex_terms_conserve_mass():
    n = 15
    f = RNG.standard_normal(n)
    theta = RNG.random(n)
    E = imex_terms_1d(f, theta, 0.1, 1e-3)
    assert abs(trap_1d(E, 0.1)) <= 1e-15


def test_uniform_stationary_and_equilibrium():
    n = 9
    u = np.full(n, 2.0)
    z = np.zeros(n)
    assert np.array_equal(explicit_step_u_1d(u, z, z, 0.1, 1e-3, 1.0), u)
    r = cn_step_u_1d(u, u, z, z, z, z, 0.1, 1e-3, 1.0)
    assert np.allclose(r, 0.0, atol=1e-15)

    a, b = 0.4, 0.1
    phi = a * u / b
    r = cn_step_phi_1d(phi, phi, u, u, 0.1, 1e-3, 1.0, a, b)
    assert np.allclose(r, 0.0, atol=1e-13)
    out = explicit_step_phi_1d(z.copy(), u, 0.1, 1e-3, 1.0, a, b)
    assert np.all(out > 0.0)


def test_chemotactic_flux_linear_phi():
    p = ModelParams(k1=2.0, k2=1.0, gamma=0.0)
    x = np.linspace(0.0, 1.0, 11)
    u = np.ones_like(x)
    f, theta = chemotactic_flux_1d(u, 3.0 * x, 0.1, p)
    assert np.allclose(f, 6.0)      # chi=2, slope 3
    assert np.allclose(theta, 6.0)
