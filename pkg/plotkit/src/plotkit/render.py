"""Figure renderers. Pure functions of (input files, options, seed)."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from plotkit.frames import SPECIES, load_ledger, load_snapshot  # noqa: E402

__all__ = ["render_cells", "render_fields", "render_mass"]


def _group_by_time(paths):
    frames = [load_snapshot(p) for p in paths]
    groups = defaultdict(list)
    for fr in frames:
        groups[fr.t].append(fr)
    return dict(sorted(groups.items()))


def _sorted_domains(frames):
    def key(fr):
        if fr.domain == "left":
            return (0, 0)
        if fr.domain == "right":
            return (2, 0)
        return (1, int(fr.domain.split("_")[-1]))
    return sorted(frames, key=key)


def render_fields(snapshot_paths, species=SPECIES, out_dir=".",
                  cmap="viridis", shared_scale=True, dpi=100) -> list:
    """One composite figure per species per snapshot time.

    Chambers are drawn as heatmaps and the channels as profile lines, all
    against the global physical x coordinate. With shared_scale the color
    range spans every domain in the frame, otherwise each panel autoscales.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for idx, (t, frames) in enumerate(_group_by_time(snapshot_paths).items()):
        frames = _sorted_domains(frames)
        for s in species:
            chambers = [fr for fr in frames if fr.is_2d]
            channels = [fr for fr in frames if not fr.is_2d]
            ncols = len(chambers) + (1 if channels else 0)
            widths = []
            for fr in chambers[:1]:
                widths.append(fr.x[-1] - fr.x[0])
            if channels:
                widths.append(channels[0].x[-1] - channels[0].x[0])
            for fr in chambers[1:]:
                widths.append(fr.x[-1] - fr.x[0])
            fig, axes = plt.subplots(
                1, ncols, figsize=(9, 4), dpi=dpi, sharey=False,
                gridspec_kw={"width_ratios": widths})
            axes = np.atleast_1d(axes)
            if shared_scale:
                vals = np.concatenate([fr.fields[s].ravel() for fr in frames])
                vmin, vmax = float(vals.min()), float(vals.max())
                if vmin == vmax:
                    vmax = vmin + 1.0
            else:
                vmin = vmax = None
            col = 0
            last_mesh = None
            for fr in chambers[:1]:
                last_mesh = axes[col].pcolormesh(
                    fr.x, fr.y, fr.fields[s].T, cmap=cmap, vmin=vmin,
                    vmax=vmax, shading="nearest")
                axes[col].set_title(fr.domain)
                axes[col].set_xlabel("x")
                axes[col].set_ylabel("y")
                col += 1
            if channels:
                for fr in channels:
                    axes[col].plot(fr.x, fr.fields[s], label=fr.domain)
                if vmin is not None:
                    axes[col].set_ylim(vmin, vmax)
                axes[col].set_title("channels")
                axes[col].set_xlabel("x")
                axes[col].legend(fontsize=6)
                col += 1
            for fr in chambers[1:]:
                last_mesh = axes[col].pcolormesh(
                    fr.x, fr.y, fr.fields[s].T, cmap=cmap, vmin=vmin,
                    vmax=vmax, shading="nearest")
                axes[col].set_title(fr.domain)
                axes[col].set_xlabel("x")
                col += 1
            if last_mesh is not None:
                fig.colorbar(last_mesh, ax=list(axes), shrink=0.85)
            fig.suptitle(f"{s} at t={t:g}")
            path = out_dir / f"fields_{s}_{idx:04d}.png"
            fig.savefig(path)
            plt.close(fig)
            written.append(path)
    return written


def render_mass(ledger_path, out_path, compare=None, dpi=100) -> Path:
    """Total-mass curves per species plus a relative-drift subplot.

    compare: optional second ledger overlaid dashed (e.g. a naive-boundary
    run against the conservative one).
    """
    table = load_ledger(ledger_path)
    other = load_ledger(compare) if compare is not None else None
    fig, (ax_m, ax_d) = plt.subplots(2, 1, figsize=(7, 6), dpi=dpi,
                                     sharex=True)
    for s in SPECIES:
        line, = ax_m.plot(table.times, table.totals[s], label=s)
        drift = np.maximum(table.drift(s), 1e-18)
        ax_d.semilogy(table.times, drift, color=line.get_color())
        if other is not None:
            ax_m.plot(other.times, other.totals[s], "--",
                      color=line.get_color())
            ax_d.semilogy(other.times, np.maximum(other.drift(s), 1e-18),
                          "--", color=line.get_color())
    ax_m.set_ylabel("total mass")
    ax_m.legend()
    ax_d.set_ylabel("relative drift")
    ax_d.set_xlabel("t")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def cell_counts(density: np.ndarray, scale: float,
                threshold: float) -> np.ndarray:
    """Marker count per grid cell: round(scale * density), zero below the
    threshold. Deterministic, so doubling scale doubles counts exactly up
    to rounding."""
    d = np.asarray(density, dtype=float)
    if np.any(d < 0):
        raise ValueError("cell rendering expects nonnegative densities")
    counts = np.rint(scale * d).astype(int)
    counts[d < threshold] = 0
    return counts


def render_cells(snapshot_paths, out_path, scale=1.0, threshold=0.0,
                 seed=0, dpi=100) -> Path:
    """Dot-cloud view: immune cells as dots, tumor cells as squares.

    Marker counts per cell follow cell_counts; positions are scattered
    uniformly inside each grid cell with a seeded generator, so the figure
    is reproducible. Only 2D domains are drawn.
    """
    frames = [load_snapshot(p) for p in snapshot_paths]
    frames = [fr for fr in frames if fr.is_2d]
    rng = np.random.default_rng(seed)
    fig, ax = plt.subplots(figsize=(8, 4), dpi=dpi)
    total = {"T": 0, "M": 0}
    for fr in _sorted_domains(frames):
        dx = fr.x[1] - fr.x[0]
        dy = fr.y[1] - fr.y[0]
        for s, marker, color in (("T", "s", "tab:red"), ("M", "o", "tab:blue")):
            counts = cell_counts(fr.fields[s], scale, threshold)
            total[s] += int(counts.sum())
            xs, ys = [], []
            for i in range(counts.shape[0]):
                for j in range(counts.shape[1]):
                    c = counts[i, j]
                    if c == 0:
                        continue
                    xs.append(fr.x[i] + dx * (rng.random(c) - 0.5))
                    ys.append(fr.y[j] + dy * (rng.random(c) - 0.5))
            if xs:
                ax.scatter(np.concatenate(xs), np.concatenate(ys), s=6,
                           marker=marker, color=color, linewidths=0,
                           label=None)
        ax.axvline(fr.x[0], color="0.8", lw=0.5)
        ax.axvline(fr.x[-1], color="0.8", lw=0.5)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    t = frames[0].t if frames else 0.0
    ax.set_title(f"cells at t={t:g} ({total['T']} tumor, {total['M']} immune)")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
