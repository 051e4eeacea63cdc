import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chemochip.model import (ModelParams, chemotactic_sensitivity, drug_rate,
                             kill_rate)


def test_default_sensitivity_values():
    p = ModelParams()
    # frozen reference values at the default k1, k2, gamma
    assert chemotactic_sensitivity(1.0, 0.0, p) == pytest.approx(156.0)
    assert chemotactic_sensitivity(2.0, 5.0e-6, p) == pytest.approx(78.0)


def test_sensitivity_pole_rejected():
    p = ModelParams(k2=0.5)
    with pytest.raises(ValueError):
        chemotactic_sensitivity(1.0, -0.5, p)


def test_kill_rate_values():
    p = ModelParams(k_omega=1.0)
    assert kill_rate(1.0, p) == pytest.approx(0.5)
    assert kill_rate(0.0, p) == 0.0
    with pytest.raises(ValueError):
        kill_rate(-1.0, p)


@given(st.floats(0.0, 1e6))
def test_kill_rate_bounded(om):
    p = ModelParams(k_omega=2.5)
    r = kill_rate(om, p)
    assert 0.0 <= r < 2.5 or r == pytest.approx(2.5)


def test_drug_rate_values():
    p = ModelParams(K_M=2.0, alpha_M=math.log(2.0))
    assert drug_rate(1.0, "M", p) == pytest.approx(1.0)
    assert drug_rate(0.0, "M", p) == 2.0
    assert drug_rate(5.0, "T", p) == 0.0
    with pytest.raises(ValueError):
        drug_rate(0.0, "phi", p)


def test_wave_speed_defaults():
    p = ModelParams(D_T=4.0, D_M=9.0)
    assert p.wave_speed_T == 2.0
    assert p.wave_speed_M == 3.0
    assert ModelParams(lambda_T_wave=0.05).wave_speed_T == 0.05


def test_param_validation():
    with pytest.raises(ValueError):
        ModelParams(D_T=0.0)
    with pytest.raises(ValueError):
        ModelParams(k2=0.0)


def test_zero_sources():
    p = ModelParams(K_T=1.0, K_M=1.0).zero_sources()
    assert p.alpha_phi == p.alpha_omega == p.k_omega == 0.0
    assert p.K_T == p.K_M == 0.0
    assert p.D_T == ModelParams().D_T  # diffusion untouched


def test_monotonicity_kill_condition():
    from chemochip import ChipLayout, SystemState, build_grid
    from chemochip.model import monotonicity_check

    lay = ChipLayout(Lx=1.0, Ly=1.0, L=0.5, channels=((0.25, 0.5),))
    grid = build_grid(lay, dx=0.25, dy=0.25, dt=1e-3)
    st_ = SystemState(grid, "parabolic")
    p = ModelParams(k_omega=1.0, k1=0.0)
    st_.chambers["left"]["T"][:] = 3.0
    st_.chambers["left"]["omega"][:] = 1.0
    rep = monotonicity_check(st_, grid, p)
    # lambda_T(1) * T = 0.5 * 3 = 1.5 > 1
    assert not rep.ok
    assert rep.kill_margin == pytest.approx(0.5)

    st_.chambers["left"]["T"][:] = 1.5
    assert monotonicity_check(st_, grid, p).ok


def test_monotonicity_chemo_condition():
    from chemochip import ChipLayout, SystemState, build_grid
    from chemochip.model import monotonicity_check

    lay = ChipLayout(Lx=1.0, Ly=1.0, L=0.5, channels=((0.25, 0.5),))
    grid = build_grid(lay, dx=0.25, dy=0.25, dt=1e-3)
    st_ = SystemState(grid, "parabolic")
    x, _ = grid.chamber_coords("left")
    p = ModelParams(D_M=1.0, k1=1.0, k2=1.0, gamma=0.0, k_omega=0.0)
    # |dphi/dx| = 2 > sqrt(D_M) = 1 with chi = 1
    st_.chambers["left"]["phi"][:] = 2.0 * x[:, None]
    assert not monotonicity_check(st_, grid, p).ok
    st_.chambers["left"]["phi"][:] = 0.5 * x[:, None]
    assert monotonicity_check(st_, grid, p).ok
