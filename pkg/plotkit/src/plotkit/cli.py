"""Command-line entry points, one per renderer."""

from __future__ import annotations

import argparse
import sys

from plotkit.frames import SPECIES, FrameError
from plotkit.render import render_cells, render_fields, render_mass


def main_fields(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="plotkit-fields",
                                 description="heatmap/profile composites "
                                             "from snapshot CSVs")
    ap.add_argument("snapshots", nargs="+")
    ap.add_argument("-o", "--out-dir", default=".")
    ap.add_argument("--species", nargs="+", default=list(SPECIES),
                    choices=list(SPECIES))
    ap.add_argument("--cmap", default="viridis")
    ap.add_argument("--per-panel-scale", action="store_true",
                    help="autoscale each panel instead of a shared range")
    args = ap.parse_args(argv)
    try:
        paths = render_fields(args.snapshots, species=args.species,
                              out_dir=args.out_dir, cmap=args.cmap,
                              shared_scale=not args.per_panel_scale)
    except (FrameError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


def main_mass(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="plotkit-mass",
                                 description="mass-evolution curves from a "
                                             "ledger CSV")
    ap.add_argument("ledger")
    ap.add_argument("-o", "--out", default="mass.png")
    ap.add_argument("--compare", default=None,
                    help="second ledger to overlay dashed")
    args = ap.parse_args(argv)
    try:
        print(render_mass(args.ledger, args.out, compare=args.compare))
    except (FrameError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main_cells(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="plotkit-cells",
                                 description="dot-cloud cell view from "
                                             "snapshot CSVs")
    ap.add_argument("snapshots", nargs="+")
    ap.add_argument("-o", "--out", default="cells.png")
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--threshold", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    try:
        print(render_cells(args.snapshots, args.out, scale=args.scale,
                           threshold=args.threshold, seed=args.seed))
    except (FrameError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
