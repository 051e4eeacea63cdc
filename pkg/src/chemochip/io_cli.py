"""Run configuration, CSV output contracts, convergence studies, CLI.

Configs are YAML with four sections (layout, grid, params, solve) plus run
options and a list of initial-condition primitives. Unknown keys are
rejected: a typo in a coefficient name must not silently fall back to a
default.

CSV contracts (consumed by external tooling, keep stable):
- snapshots: one file per domain and output time, a comment line
  "# t=<time> domain=<id> model=<channel-model>" followed by a header row
  and rows i,j,x,y,T,M,phi,omega (1D domains drop j and y; hyperbolic
  channels append vT,vM).
- mass ledger: one row per (time, domain) with columns
  t,domain,mass_T,mass_M,mass_phi,mass_omega,total_T,total_M,total_phi,total_omega.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from chemochip.diagnostics import SPECIES, MassLedger, mass_drift
from chemochip.geometry import ChipLayout, DiscreteLayout, GridError, build_grid
from chemochip.model import ModelParams
from chemochip.solver import (SafeguardError, SolverError, SolveSettings,
                              SystemState, run_simulation)

__all__ = [
    "ConfigError",
    "RunConfig",
    "build_initial_state",
    "convergence_study",
    "dump_config",
    "load_config",
    "main",
    "read_ledger",
    "write_ledger",
    "write_snapshot",
]

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_SAFEGUARD = 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    layout: ChipLayout
    dx: float
    dy: float
    dt: float
    dx_channel: float | None
    params: ModelParams
    settings: SolveSettings
    t_end: float
    initial: list = field(default_factory=list)
    snapshot_every: int = 0
    ledger_every: int = 1
    output_dir: str = "out"


def _take(section: dict, name: str, allowed: set, required: set = frozenset()):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
    missing = required - set(section)
    if missing:
        raise ConfigError(f"{name}: missing keys {sorted(missing)}")


_IC_KEYS = {
    "gaussian": {"domain", "species", "kind", "amplitude", "center", "width"},
    "constant": {"domain", "species", "kind", "value"},
    "linear": {"domain", "species", "kind", "offset", "slope"},
}


def load_config(path) -> RunConfig:
    """Parse and validate a YAML run configuration."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    _take(raw, "root", {"layout", "grid", "params", "solve", "run", "initial"},
          {"layout", "grid", "run"})

    lay = dict(raw["layout"])
    _take(lay, "layout", {"Lx", "Ly", "L", "channels", "K", "right_chamber"},
          {"Lx", "Ly", "L", "channels"})
    try:
        layout = ChipLayout(
            Lx=float(lay["Lx"]), Ly=float(lay["Ly"]), L=float(lay["L"]),
            channels=tuple((float(a), float(b)) for a, b in lay["channels"]),
            K=lay.get("K", 1.0),
            right_chamber=bool(lay.get("right_chamber", True)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"layout: {exc}") from exc

    g = dict(raw["grid"])
    _take(g, "grid", {"dx", "dy", "dt", "dx_channel"}, {"dx", "dy", "dt"})

    par = dict(raw.get("params") or {})
    known = {f.name for f in dataclasses.fields(ModelParams)}
    _take(par, "params", known)
    try:
        params = ModelParams(**{k: (float(v) if v is not None else None)
                                for k, v in par.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from exc

    sol = dict(raw.get("solve") or {})
    known = {f.name for f in dataclasses.fields(SolveSettings)}
    _take(sol, "solve", known)
    try:
        settings = SolveSettings(**sol)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solve: {exc}") from exc

    run = dict(raw["run"])
    _take(run, "run", {"t_end", "snapshot_every", "ledger_every", "output_dir"},
          {"t_end"})

    initial = list(raw.get("initial") or [])
    for ic in initial:
        if not isinstance(ic, dict) or "kind" not in ic:
            raise ConfigError(f"initial: entry without a kind: {ic!r}")
        if ic["kind"] not in _IC_KEYS:
            raise ConfigError(f"initial: unknown kind {ic['kind']!r}")
        _take(ic, f"initial[{ic['kind']}]", _IC_KEYS[ic["kind"]],
              _IC_KEYS[ic["kind"]])
        if ic["species"] not in SPECIES:
            raise ConfigError(f"initial: unknown species {ic['species']!r}")

    return RunConfig(
        layout=layout,
        dx=float(g["dx"]), dy=float(g["dy"]), dt=float(g["dt"]),
        dx_channel=(float(g["dx_channel"]) if "dx_channel" in g else None),
        params=params, settings=settings,
        t_end=float(run["t_end"]),
        snapshot_every=int(run.get("snapshot_every", 0)),
        ledger_every=int(run.get("ledger_every", 1)),
        output_dir=str(run.get("output_dir", "out")),
        initial=initial)


def dump_config(cfg: RunConfig) -> dict:
    """Inverse of config_from_dict (round-trip stable)."""
    out = {
        "layout": {
            "Lx": cfg.layout.Lx, "Ly": cfg.layout.Ly, "L": cfg.layout.L,
            "channels": [list(c) for c in cfg.layout.channels],
            "K": (cfg.layout.K if np.isscalar(cfg.layout.K)
                  else list(cfg.layout.K)),
            "right_chamber": cfg.layout.right_chamber,
        },
        "grid": {"dx": cfg.dx, "dy": cfg.dy, "dt": cfg.dt},
        "params": dataclasses.asdict(cfg.params),
        "solve": dataclasses.asdict(cfg.settings),
        "run": {"t_end": cfg.t_end, "snapshot_every": cfg.snapshot_every,
                "ledger_every": cfg.ledger_every,
                "output_dir": cfg.output_dir},
        "initial": [dict(ic) for ic in cfg.initial],
    }
    if cfg.dx_channel is not None:
        out["grid"]["dx_channel"] = cfg.dx_channel
    return out


def _domains_for(spec: str, state: SystemState) -> list[str]:
    names = list(state.domains())
    if spec == "channels":
        return [d for d in names if d.startswith("channel_")]
    if spec not in names:
        raise ConfigError(f"initial: unknown domain {spec!r}")
    return [spec]


def _apply_ic(state: SystemState, grid: DiscreteLayout, ic: dict) -> None:
    for domain in _domains_for(ic["domain"], state):
        f = state.field(domain, ic["species"])
        if f.ndim == 2:
            x, y = grid.chamber_coords(domain)
            X, Y = np.meshgrid(x, y, indexing="ij")
        else:
            X = grid.channel_coords()
            Y = None
        if ic["kind"] == "constant":
            f += float(ic["value"])
        elif ic["kind"] == "linear":
            f += float(ic["offset"]) + float(ic["slope"]) * X
        else:
            c = [float(v) for v in ic["center"]]
            w = float(ic["width"])
            if w <= 0:
                raise ConfigError("initial: gaussian width must be positive")
            r2 = (X - c[0]) ** 2
            if Y is not None:
                if len(c) != 2:
                    raise ConfigError("initial: 2D gaussian needs center [x, y]")
                r2 = r2 + (Y - c[1]) ** 2
            f += float(ic["amplitude"]) * np.exp(-r2 / (2.0 * w * w))


def build_initial_state(cfg: RunConfig):
    """Grid plus the fully seeded t=0 state for a configuration."""
    try:
        grid = build_grid(cfg.layout, cfg.dx, cfg.dy, cfg.dt, cfg.dx_channel)
    except GridError as exc:
        raise ConfigError(str(exc)) from exc
    state = SystemState(grid, cfg.settings.channel_model)
    for ic in cfg.initial:
        _apply_ic(state, grid, ic)
    return grid, state


# ---------------------------------------------------------------------------
# CSV output


def write_snapshot(directory, state: SystemState, grid: DiscreteLayout,
                   step: int) -> list:
    """Write one CSV per domain; returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for domain in state.domains():
        path = directory / f"fields_step{step:06d}_{domain}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(f"# t={state.t!r} domain={domain} "
                     f"model={state.channel_model}\n")
            w = csv.writer(fh)
            sample = state.field(domain, "T")
            if sample.ndim == 2:
                x, y = grid.chamber_coords(domain)
                w.writerow(["i", "j", "x", "y", *SPECIES])
                cols = [state.field(domain, s) for s in SPECIES]
                for i in range(sample.shape[0]):
                    for j in range(sample.shape[1]):
                        w.writerow([i, j, repr(float(x[i])), repr(float(y[j])),
                                    *(repr(float(c[i, j])) for c in cols)])
            else:
                x = grid.channel_coords()
                hyp = state.channel_model == "hyperbolic"
                header = ["i", "x", *SPECIES] + (["vT", "vM"] if hyp else [])
                w.writerow(header)
                cols = [state.field(domain, s) for s in SPECIES]
                if hyp:
                    cols += [state.field(domain, "vT"),
                             state.field(domain, "vM")]
                for i in range(sample.shape[0]):
                    w.writerow([i, repr(float(x[i])),
                                *(repr(float(c[i])) for c in cols)])
        paths.append(path)
    return paths


def write_ledger(path, ledger: MassLedger) -> None:
    domains = sorted({d for (d, _s) in ledger.per_domain})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "domain"] + [f"mass_{s}" for s in SPECIES]
                   + [f"total_{s}" for s in SPECIES])
        for k, t in enumerate(ledger.times):
            for d in domains:
                w.writerow([repr(float(t)), d]
                           + [repr(float(ledger.per_domain[(d, s)][k]))
                              for s in SPECIES]
                           + [repr(float(ledger.totals[s][k])) for s in SPECIES])


def read_ledger(path) -> MassLedger:
    """Rebuild a MassLedger from its CSV form."""
    ledger = MassLedger()
    rows: dict[float, dict] = {}
    order: list[float] = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            t = float(row["t"])
            if t not in rows:
                rows[t] = {}
                order.append(t)
            rows[t][row["domain"]] = {s: float(row[f"mass_{s}"])
                                      for s in SPECIES}
    for t in order:
        ledger.append(t, rows[t])
    return ledger


# ---------------------------------------------------------------------------
# convergence


def _state_l1_diff(coarse: SystemState, gc: DiscreteLayout,
                   fine: SystemState, gf: DiscreteLayout) -> float:
    """L1 norm of (coarse - fine restricted to the coarse nodes)."""
    rx = int(round(gc.dx / gf.dx))
    rc = int(round(gc.dx_channel / gf.dx_channel))
    err = 0.0
    for domain in coarse.domains():
        for s in SPECIES:
            c = coarse.field(domain, s)
            f = fine.field(domain, s)
            if c.ndim == 2:
                ry = int(round(gc.dy / gf.dy))
                d = np.abs(c - f[::rx, ::ry])
                wx = np.ones(d.shape[0]); wx[0] = wx[-1] = 0.5
                wy = np.ones(d.shape[1]); wy[0] = wy[-1] = 0.5
                err += gc.dx * gc.dy * float(wx @ d @ wy)
            else:
                d = np.abs(c - f[::rc])
                w = np.ones(d.shape[0]); w[0] = w[-1] = 0.5
                err += gc.dx_channel * float(w @ d)
    return err


@dataclass(frozen=True)
class ConvergenceReport:
    variable: str  # "dx" | "dt"
    steps: tuple
    errors: tuple
    slope: float


def convergence_study(cfg: RunConfig, variable: str, ladder, reference) -> ConvergenceReport:
    """Self-convergence against a fine reference run.

    variable="dx" scales dx, dy and dx_channel together (values must be
    integer refinements of the reference); variable="dt" keeps the grid and
    scales the step.
    """
    if variable not in ("dx", "dt"):
        raise ConfigError(f"convergence variable must be dx or dt, not {variable!r}")

    def run_at(h):
        c = dataclasses.replace(cfg)
        if variable == "dx":
            scale = h / cfg.dx
            c = dataclasses.replace(cfg, dx=h, dy=cfg.dy * scale,
                                    dx_channel=(cfg.dx_channel or cfg.dx) * scale)
        else:
            c = dataclasses.replace(cfg, dt=h)
        grid, state = build_initial_state(c)
        res = run_simulation(state, grid, c.params, c.settings, c.t_end,
                             ledger_every=0)
        return grid, res.state

    gf, sf = run_at(reference)
    errors = []
    for h in ladder:
        gc, sc = run_at(h)
        errors.append(_state_l1_diff(sc, gc, sf, gf))
    slope = float(np.polyfit(np.log(np.asarray(ladder, dtype=float)),
                             np.log(np.asarray(errors)), 1)[0])
    return ConvergenceReport(variable=variable, steps=tuple(ladder),
                             errors=tuple(errors), slope=slope)


# ---------------------------------------------------------------------------
# CLI


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.output is not None:
        cfg.output_dir = args.output
    grid, state = build_initial_state(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    def hook(st, step):
        write_snapshot(out, st, grid, step)

    t0 = time.time()
    try:
        res = run_simulation(state, grid, cfg.params, cfg.settings, cfg.t_end,
                             snapshot_hook=hook,
                             snapshot_every=cfg.snapshot_every,
                             ledger_every=cfg.ledger_every)
    except SafeguardError as exc:
        print(f"safeguard abort: {exc}", file=sys.stderr)
        return EXIT_SAFEGUARD
    write_ledger(out / "mass_ledger.csv", res.ledger)
    summary = {
        "t_end": cfg.t_end,
        "steps": res.steps,
        "channel_model": cfg.settings.channel_model,
        "domains": list(state.domains()),
        "mass_initial": {s: res.ledger.totals[s][0] for s in SPECIES},
        "mass_final": {s: res.ledger.totals[s][-1] for s in SPECIES},
        "mass_drift": {s: mass_drift(res.ledger, s) for s in SPECIES},
        "min_density": res.min_density,
        "safeguard_log": res.safeguard_log,
        "wall_time_s": time.time() - t0,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    print(f"finished {res.steps} steps in {summary['wall_time_s']:.1f}s; "
          f"output in {out}")
    return 0


def _cmd_converge(args) -> int:
    cfg = load_config(args.config)
    ladder = [float(v) for v in args.ladder]
    report = convergence_study(cfg, args.variable, ladder, float(args.reference))
    for h, e in zip(report.steps, report.errors):
        print(f"{args.variable}={h:g} error={e:.6e}")
    print(f"slope: {report.slope:.3f}")
    if args.json is not None:
        with open(args.json, "w") as fh:
            json.dump(dataclasses.asdict(report), fh, indent=2)
    return 0


def _cmd_mass_audit(args) -> int:
    ledger = read_ledger(args.ledger)
    worst = 0.0
    for s in SPECIES:
        d = mass_drift(ledger, s)
        worst = max(worst, d)
        print(f"{s}: max relative drift {d:.3e}")
    if args.fail_above is not None and worst > float(args.fail_above):
        print(f"drift {worst:.3e} above {args.fail_above}", file=sys.stderr)
        return EXIT_SAFEGUARD
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="chemochip",
                                 description="chemotaxis chip simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a configuration")
    p_sim.add_argument("config")
    p_sim.add_argument("-o", "--output", default=None,
                       help="override run.output_dir")

    p_conv = sub.add_parser("converge", help="self-convergence study")
    p_conv.add_argument("config")
    p_conv.add_argument("--variable", choices=("dx", "dt"), required=True)
    p_conv.add_argument("--ladder", nargs="+", required=True)
    p_conv.add_argument("--reference", required=True)
    p_conv.add_argument("--json", default=None)

    p_audit = sub.add_parser("mass-audit", help="summarize a mass ledger CSV")
    p_audit.add_argument("ledger")
    p_audit.add_argument("--fail-above", default=None)

    args = ap.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "converge":
            return _cmd_converge(args)
        return _cmd_mass_audit(args)
    except (ConfigError, GridError, FileNotFoundError, yaml.YAMLError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
