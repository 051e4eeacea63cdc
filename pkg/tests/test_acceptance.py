"""End-to-end acceptance gate.

Each test prints a single "criterion N: PASS/FAIL" line with the measured
quantity before asserting, so a full run gives a nine-line scoreboard.
Criteria 1-8 exercise the simulation engine only; criterion 9 covers the
plotkit companion package and is skipped when it is not installed.
"""

import dataclasses
import hashlib
import time
from pathlib import Path

import numpy as np
import pytest

from chemochip import io_cli
from chemochip.diagnostics import SPECIES, mass_drift, trap_1d
from chemochip.solver import SystemState, advance_step, run_simulation

from test_hyperbolic import brute_force_aho_step
from test_scheme1d import brute_force_explicit_1d
from test_scheme2d import brute_force_explicit_2d

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def report(num, ok, detail):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num}: {detail}"


def run_config(name, **overrides):
    cfg = io_cli.load_config(CONFIGS / name)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    grid, state = io_cli.build_initial_state(cfg)
    res = run_simulation(state, grid, cfg.params, cfg.settings, cfg.t_end,
                         ledger_every=1)
    return cfg, grid, res


@pytest.fixture(scope="session")
def chip_parabolic_run(tmp_path_factory):
    """Criterion-1 run, kept around with CSV outputs for criterion 9."""
    out = tmp_path_factory.mktemp("chip_parabolic")
    cfg = io_cli.load_config(CONFIGS / "chip_parabolic.yaml")
    grid, state = io_cli.build_initial_state(cfg)

    def hook(st, step):
        io_cli.write_snapshot(out, st, grid, step)

    t0 = time.time()
    res = run_simulation(state, grid, cfg.params, cfg.settings, cfg.t_end,
                         snapshot_hook=hook, snapshot_every=1000,
                         ledger_every=10)
    wall = time.time() - t0
    io_cli.write_ledger(out / "mass_ledger.csv", res.ledger)
    return out, res, wall


def test_criterion_1_parabolic_mass_conservation(chip_parabolic_run):
    _out, res, wall = chip_parabolic_run
    drift = max(mass_drift(res.ledger, s) for s in SPECIES
                if res.ledger.totals[s][0] > 0.0)
    ok = res.steps == 1000 and drift <= 1e-12 and wall < 60.0
    report(1, ok, f"1000 steps, max drift {drift:.2e}, {wall:.1f}s")


def test_criterion_2_hyperbolic_mass_and_flux_decay():
    _cfg, _grid, res = run_config("chip_hyperbolic.yaml")
    drift = max(mass_drift(res.ledger, s) for s in SPECIES
                if res.ledger.totals[s][0] > 0.0)
    _cfg2, _grid2, decay = run_config("flux_decay.yaml")
    vmax = max(np.abs(ch[f"v{s}"]).max()
               for ch in decay.state.channels for s in ("T", "M"))
    ok = drift <= 1e-12 and vmax < 1e-10
    report(2, ok, f"drift {drift:.2e}, final ||v||_inf {vmax:.2e}")


def test_criterion_3_naive_endpoint_contrast():
    from chemochip.scheme1d_parabolic import explicit_step_u_1d

    n, dx, dt, D = 12, 0.1, 1e-4, 1.0
    u0 = np.exp(-np.linspace(-2.0, 2.0, n) ** 2)
    z = np.zeros(n)
    m0 = trap_1d(u0, dx)
    drifts = {}
    for bc in ("mass", "copy"):
        u = u0.copy()
        for _ in range(2000):
            u = explicit_step_u_1d(u, z, z, dx, dt, D, bc=bc)
        drifts[bc] = abs(trap_1d(u, dx) - m0) / m0
    ok = drifts["mass"] <= 1e-12 and drifts["copy"] >= 1e-6
    report(3, ok, f"conservative drift {drifts['mass']:.2e}, "
                  f"copy-endpoint drift {drifts['copy']:.2e}")


def test_criterion_4_second_order_convergence():
    cfg = io_cli.load_config(CONFIGS / "example1.yaml")
    space = io_cli.convergence_study(cfg, "dx",
                                     ladder=[1 / 8, 1 / 16, 1 / 32],
                                     reference=1 / 128)
    cfg_t = dataclasses.replace(cfg, dx=1 / 16, dy=1 / 16,
                                dx_channel=1 / 16, t_end=0.08)
    tstudy = io_cli.convergence_study(cfg_t, "dt",
                                      ladder=[8e-3, 4e-3, 2e-3],
                                      reference=1e-4)
    ok = abs(space.slope - 2.0) <= 0.2 and abs(tstudy.slope - 2.0) <= 0.2
    report(4, ok, f"space slope {space.slope:.2f}, time slope {tstudy.slope:.2f}")


def test_criterion_5_positivity_with_safeguards():
    worst = 0.0
    failures = []
    for name in ("example2.yaml", "example3.yaml", "example4.yaml"):
        _cfg, _grid, res = run_config(name)
        worst = min(worst, res.min_density)
        failures.extend(f"{name}: {m}" for m in res.safeguard_log)
    ok = worst >= -1e-13 and not failures
    report(5, ok, f"min density {worst:.2e}, safeguard messages {failures!r}")


def test_criterion_6_channel_model_contrast():
    _c1, _g1, par = run_config("example4_parabolic.yaml")
    _c2, _g2, hyp = run_config("example4_hyperbolic.yaml")
    t_par = par.state.chambers["right"]["T"].max()
    t_hyp = hyp.state.chambers["right"]["T"].max()
    ratio = t_par / t_hyp
    ok = ratio >= 1e2
    report(6, ok, f"right-chamber T max {t_par:.2e} vs {t_hyp:.2e}, "
                  f"ratio {ratio:.1e}")


def test_criterion_7_zero_permeability_decoupling():
    cfg = io_cli.load_config(CONFIGS / "chip_parabolic.yaml")
    cfg.layout = dataclasses.replace(cfg.layout, K=0.0)
    grid, full0 = io_cli.build_initial_state(cfg)
    settings, params = cfg.settings, cfg.params

    mismatches = []
    for domain in list(full0.domains()):
        solo = SystemState(grid, "parabolic")
        for s in SPECIES:
            solo.set_field(domain, s, full0.field(domain, s).copy())
        full = full0.copy()
        for _ in range(100):
            full = advance_step(full, grid, params, settings)
            solo = advance_step(solo, grid, params, settings)
        for s in SPECIES:
            if not np.array_equal(full.field(domain, s), solo.field(domain, s)):
                mismatches.append((domain, s))
    ok = not mismatches
    report(7, ok, f"7 domains x 100 steps, mismatches {mismatches!r}")


def test_criterion_8_brute_force_stencil_oracles():
    from chemochip.scheme1d_hyperbolic import aho_explicit_step
    from chemochip.scheme1d_parabolic import explicit_step_u_1d
    from chemochip.scheme2d import explicit_step_u_2d

    rng = np.random.default_rng(2024)
    u2 = rng.random((5, 5))
    fx, fy = rng.standard_normal((2, 5, 5))
    g2 = rng.standard_normal((5, 5))
    e2 = np.max(np.abs(
        explicit_step_u_2d(u2, fx, fy, g2, 0.2, 0.25, 1e-3, 0.7)
        - brute_force_explicit_2d(u2, fx, fy, g2, 0.2, 0.25, 1e-3, 0.7)))

    u1 = rng.random(5)
    f1, g1 = rng.standard_normal((2, 5))
    e1 = np.max(np.abs(explicit_step_u_1d(u1, f1, g1, 0.1, 1e-3, 0.8)
                       - brute_force_explicit_1d(u1, f1, g1, 0.1, 1e-3, 0.8)))

    uh = rng.random(5)
    vh = 0.1 * rng.standard_normal(5)
    fh, gh = rng.standard_normal((2, 5))
    gu, gv = aho_explicit_step(uh, vh, fh, gh, 0.1, 5e-3, 1.3)
    wu, wv = brute_force_aho_step(uh, vh, fh, gh, 0.1, 5e-3, 1.3)
    eh = max(np.max(np.abs(gu - wu)), np.max(np.abs(gv - wv)))

    ok = e2 <= 1e-14 and e1 <= 1e-14 and eh <= 1e-14
    report(8, ok, f"2D {e2:.1e}, 1D {e1:.1e}, AHO {eh:.1e}")


def test_criterion_9_plot_suite(chip_parabolic_run, tmp_path):
    plotkit = pytest.importorskip("plotkit")

    out, _res, _wall = chip_parabolic_run
    snaps = sorted(out.glob("fields_step001000_*.csv"))
    figs = plotkit.render_fields(snaps, out_dir=tmp_path / "figs")
    mass = plotkit.render_mass(out / "mass_ledger.csv", tmp_path / "mass.png")
    a = plotkit.render_cells(snaps, tmp_path / "a.png", scale=2.0, seed=42)
    b = plotkit.render_cells(snaps, tmp_path / "b.png", scale=2.0, seed=42)
    same = (hashlib.sha256(a.read_bytes()).hexdigest()
            == hashlib.sha256(b.read_bytes()).hexdigest())
    ok = (len(figs) == 4 and all(p.stat().st_size > 0 for p in figs)
          and mass.stat().st_size > 0 and same)
    report(9, ok, f"{len(figs)} field figures, mass plot, "
                  f"cells deterministic={same}")
