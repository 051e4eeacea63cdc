import numpy as np
import pytest
import scipy.sparse as sp

from chemochip.geometry import ChipLayout, build_grid
from chemochip.model import ModelParams
from chemochip.transmission import (add_flux_constraint, add_mouth_coupling,
                                    add_wall_coupling, ghost_value_1d,
                                    ghost_value_2d, kk_ratio, kk_ratio_check,
                                    wall_quadrature)


def test_ghost_value_2d():
    # hand-evaluated closure values
    assert ghost_value_2d(0.5, 1.0, 2.0, K=1.0, D=1.0, dx=0.1) == pytest.approx(0.7)
    assert ghost_value_2d(0.5, 1.0, 2.0, K=1.0, D=1.0, dx=0.1,
                          flux=1.0) == pytest.approx(0.9)
    # K=0, no flux: pure Neumann reflection
    assert ghost_value_2d(0.5, 1.0, 2.0, K=0.0, D=1.0, dx=0.1) == 0.5


def test_ghost_value_1d():
    got = ghost_value_1d(2.0, 1.0, 0.75, K=1.0, sigma=0.5, D=1.0, dx=0.1)
    assert got == pytest.approx(2.05)
    # K=0 reflection
    assert ghost_value_1d(2.0, 1.0, 0.75, K=0.0, sigma=0.5, D=1.0, dx=0.1) == 2.0
    # continuity: quadrature = sigma*u_0 cancels the exchange
    assert ghost_value_1d(2.0, 1.0, 0.5, K=3.0, sigma=0.5, D=1.0, dx=0.1) == 2.0


def test_wall_quadrature():
    v = np.array([1.0, 2.0, 3.0])
    assert wall_quadrature(v, 0.5) == pytest.approx(0.5 * (0.5 + 2.0 + 1.5))
    with pytest.raises(ValueError):
        wall_quadrature(np.array([1.0]), 0.5)


def test_kk_ratio_values():
    assert kk_ratio(1.0, 1e-3, 0.25, 0.5) == pytest.approx(2e-3)
    assert kk_ratio(1e3, 1e-2, 0.1, 1.0) == pytest.approx(100.0)


def test_kk_ratio_check():
    lay = ChipLayout(Lx=10.0, Ly=20.0, L=5.0, channels=((2.0, 3.0),), K=1.0)
    g = build_grid(lay, dx=0.5, dy=0.5, dt=1e-3)
    rep = kk_ratio_check(g, ModelParams())
    assert rep.ok and len(rep.entries) == 2

    stiff = build_grid(ChipLayout(Lx=10.0, Ly=20.0, L=5.0,
                                  channels=((2.0, 3.0),), K=1e3),
                       dx=0.5, dy=0.5, dt=1e-2)
    assert not kk_ratio_check(stiff).ok
    # K=0 channels produce no entries at all
    off = build_grid(ChipLayout(Lx=10.0, Ly=20.0, L=5.0,
                                channels=((2.0, 3.0),), K=0.0),
                     dx=0.5, dy=0.5, dt=1e-2)
    assert kk_ratio_check(off).ok and kk_ratio_check(off).entries == ()


def _entries_setup():
    lay = ChipLayout(Lx=2.0, Ly=2.0, L=1.0, channels=((0.5, 1.0),), K=2.0)
    grid = build_grid(lay, dx=0.25, dy=0.25, dt=1e-3)
    iface = grid.interface_indices(0, "left")
    return grid, iface


def test_coupling_conserves_weighted_mass():
    """Chamber loss and channel gain cancel against the trapezoid weights."""
    grid, iface = _entries_setup()
    nw = iface.j_count
    # unknown layout: [wall nodes over the j-range, one channel end node]
    P = sp.lil_matrix((nw + 1, nw + 1))
    wall_idx = list(range(nw))
    add_wall_coupling(P, iface, grid.dt, grid.dx, grid.dy, wall_idx, nw)
    add_mouth_coupling(P, iface, grid.dt, grid.dx_channel, grid.dy, nw, wall_idx)
    # mass vector: wall nodes sit on the i = Nx+1 column (x-weight 1/2) at
    # interior j (y-weight 1); the channel end node carries weight 1/2
    w = np.concatenate([grid.dx * grid.dy * 0.5 * np.ones(nw),
                        [grid.dx_channel * 0.5]])
    x = np.random.default_rng(3).random(nw + 1)
    assert abs(w @ (P @ x)) <= 1e-15


def test_wall_coupling_vanishes_on_continuity():
    grid, iface = _entries_setup()
    nw = iface.j_count
    P = sp.lil_matrix((nw + 1, nw + 1))
    add_wall_coupling(P, iface, grid.dt, grid.dx, grid.dy, list(range(nw)), nw)
    add_mouth_coupling(P, iface, grid.dt, grid.dx_channel, grid.dy, nw,
                       list(range(nw)))
    # equal values on both sides: no exchange
    assert np.allclose(P @ np.ones(nw + 1), 0.0, atol=1e-15)


def test_flux_constraint_row():
    grid, iface = _entries_setup()
    nw = iface.j_count
    # layout: [wall nodes, u_mouth, v_mouth]
    H = sp.lil_matrix((nw + 2, nw + 2))
    add_flux_constraint(H, iface, grid.dy, nw, nw + 1, list(range(nw)), 1.0)
    x = np.zeros(nw + 2)
    x[:nw] = 3.0   # wall trace
    x[nw] = 1.0    # u_0
    rhs = (H @ x)[nw + 1]
    quad = wall_quadrature(np.full(nw, 3.0), grid.dy)
    assert rhs == pytest.approx(-iface.K * iface.sigma * 1.0 + iface.K * quad)
