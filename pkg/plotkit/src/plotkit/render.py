"""Figure rendering for maxslice run directories.

One raster image per requested kind:

- "height":      the solved/exact height field (disk view for n = 2,
                 meridian section for balls).
- "h2":          |h|^2 from the geometry table, same view.
- "decay":       log-log of the per-ring angular max of |h|^2 against tau,
                 annotated with the fitted exponent read from the manifest
                 (never refitted here).
- "convergence": Newton residual histories per continuation rung, or the
                 error-vs-dr table for sweep runs.
- "boundary":    the boundary trace (r = 1 rows of the solution, or
                 boundary.csv for fit runs).

plotkit never recomputes physics; every displayed number comes from the
manifest or the CSV tables.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .artifacts import ArtifactError, RunArtifacts

KINDS = ("height", "h2", "decay", "convergence", "boundary")
FIGSIZE = (6.0, 4.5)
DPI = 130


def _structured(table, value_col):
    """Rebuild (r_levels, theta_levels, value_grid) from long-form rows.

    Full-ball tables are restricted to the phi = 0 meridian first.
    """
    r = table["r"]
    th = table["theta"]
    val = table[value_col]
    if "phi" in table:
        sel = np.abs(table["phi"]) < 1e-12
        r, th, val = r[sel], th[sel], val[sel]
    rs = np.unique(r)
    ths = np.unique(th)
    grid = np.full((rs.size, ths.size), np.nan)
    i = np.searchsorted(rs, r)
    j = np.searchsorted(ths, th)
    grid[i, j] = val
    return rs, ths, grid


def _field_panel(ax, rs, ths, grid, title, disk):
    if disk:
        TH, R = np.meshgrid(ths, rs)
        X, Y = R * np.cos(TH), R * np.sin(TH)
        ylabel = "y"
    else:
        TH, R = np.meshgrid(ths, rs)
        X, Y = R * np.sin(TH), R * np.cos(TH)   # meridian half-plane
        ylabel = "z"
    pc = ax.pcolormesh(X, Y, grid, shading="gouraud", cmap="viridis")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return pc


def _is_disk(table):
    # disk tables have azimuthal angles beyond pi; ball colatitudes do not
    return float(np.max(table["theta"])) > math.pi + 1e-9


def _render_height(art, ax):
    table = art.table("solution")
    interior = table["r"] < 1.0
    sub = {k: v[interior] for k, v in table.items()}
    rs, ths, grid = _structured(sub, "value")
    pc = _field_panel(ax, rs, ths, grid, "height u", _is_disk(table))
    return pc


def _render_h2(art, ax):
    table = art.table("geometry")
    rs, ths, grid = _structured(table, "h2")
    pc = _field_panel(ax, rs, ths, grid, "|h|^2", _is_disk(table))
    return pc


def _render_decay(art, ax):
    table = art.table("geometry")
    rs, _, grid = _structured(table, "h2")
    tau = 0.5 * (1.0 - rs ** 2)
    prof = np.nanmax(np.abs(grid), axis=1)
    keep = prof > 0
    ax.loglog(tau[keep], prof[keep], "o-", ms=3, label="max_angle |h|^2")
    exponent = art.decay_exponent
    if exponent is not None:
        window = art.decay_window or (tau[keep].min(), tau[keep].max())
        sel = keep & (tau >= window[0]) & (tau <= window[1])
        if np.any(sel):
            t0 = tau[sel][np.argmax(tau[sel])]
            v0 = prof[sel][np.argmax(tau[sel])]
            tt = np.linspace(window[0], window[1], 50)
            ax.loglog(tt, v0 * (tt / t0) ** exponent, "--",
                      label=f"fitted slope {exponent:.2f}")
        ax.set_title(f"|h|^2 boundary decay (exponent {exponent:.2f})")
    else:
        ax.set_title("|h|^2 boundary decay (at the floor)")
    ax.set_xlabel("tau")
    ax.set_ylabel("max over angle")
    ax.legend(loc="best", fontsize=8)


def _render_convergence(art, ax):
    rungs = art.result("solution", "continuation")
    if rungs:
        for rung in rungs:
            res = rung.get("residuals", [])
            ax.semilogy(range(len(res)), res, "o-", ms=3,
                        label=f"amplitude fraction {rung.get('lambda')}")
        ax.set_xlabel("Newton iteration")
        ax.set_ylabel("residual sup-norm")
        ax.set_title("continuation convergence")
        ax.legend(loc="best", fontsize=7)
        return
    if art.has("convergence"):
        table = art.table("convergence")
        ax.loglog(table["dr"], table["error"], "o-")
        ax.set_xlabel("dr")
        ax.set_ylabel("error")
        ax.set_title("refinement study")
        return
    raise ArtifactError("run has neither an iteration log nor convergence.csv")


def _render_boundary(art, ax):
    if art.has("boundary"):
        table = art.table("boundary")
        th, val = table["theta"], table["value"]
    else:
        table = art.table("solution")
        sel = table["r"] >= 1.0
        th, val = table["theta"][sel], table["value"][sel]
        if "phi" in table:
            on_meridian = np.abs(table["phi"][sel]) < 1e-12
            th, val = th[on_meridian], val[on_meridian]
    order = np.argsort(th)
    ax.plot(th[order], val[order], "o-", ms=3)
    ax.set_xlabel("theta")
    ax.set_ylabel("boundary value")
    ax.set_title("boundary trace")


_RENDERERS = {
    "height": _render_height,
    "h2": _render_h2,
    "decay": _render_decay,
    "convergence": _render_convergence,
    "boundary": _render_boundary,
}


def render(run_dir, kinds=KINDS, out_dir=None):
    """Render the requested figure kinds; returns the written paths.

    Kinds whose tables are absent are skipped with a warning tuple in the
    second return slot.
    """
    art = RunArtifacts.load(run_dir)
    out = Path(out_dir) if out_dir else Path(run_dir)
    out.mkdir(parents=True, exist_ok=True)
    written, skipped = [], []
    for kind in kinds:
        if kind not in _RENDERERS:
            raise ArtifactError(f"unknown figure kind {kind!r}")
        fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
        try:
            pc = _RENDERERS[kind](art, ax)
            if pc is not None:
                fig.colorbar(pc, ax=ax, shrink=0.85)
            path = out / f"{kind}.png"
            fig.savefig(path)
            written.append(path)
        except ArtifactError as exc:
            skipped.append((kind, str(exc)))
        finally:
            plt.close(fig)
    return written, skipped
