"""Figure rendering for the CLI report paths.

Each renderer writes one PNG next to the delimited output it illustrates.
Rendering is deterministic for a fixed matplotlib version: fixed figure
geometry, no timestamps.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_DPI = 110


def _save(fig, outdir: str, name: str) -> str:
    path = os.path.join(outdir, name)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_simulate(outdir: str, checkpoints, dists_per_ic) -> str:
    """Distance of each checkpoint snapshot to the final snapshot, per IC."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for dists in dists_per_ic:
        ax.plot(checkpoints, dists, lw=0.8, alpha=0.6)
    ax.set_xscale("log")
    ax.set_xlabel("orbit length n")
    ax.set_ylabel("weak* distance to final snapshot")
    ax.set_title(f"snapshot convergence ({len(dists_per_ic)} initial conditions)")
    fig.tight_layout()
    return _save(fig, outdir, "fig_snapshots.png")


def render_bowen(outdir: str, ledger) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    log10_n = ledger.ln_n / np.log(10.0)
    ax.plot(log10_n, ledger.omega_u1, lw=0.9, label="omega(U1)")
    ax.plot(log10_n, ledger.omega_u2, lw=0.9, label="omega(U2)")
    ax.set_xlabel("log10 n")
    ax.set_ylabel("visit frequency")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"saddle visit frequencies, regime {ledger.rule.tag}")
    ax.legend()
    fig.tight_layout()
    return _save(fig, outdir, "fig_ledger.png")


def render_attractor(outdir: str, report, grid, occupation) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    cells = np.arange(grid.size)
    ax.bar(cells, occupation, width=1.0, color="silver", label="tail occupation")
    kept = report.cells.mask()
    ax.bar(cells[kept], occupation[kept], width=1.0, color="crimson",
           label=f"attractor cells ({len(report.cells)})")
    ax.set_xlabel("cell")
    ax.set_ylabel("mean tail occupation")
    ax.set_yscale("log")
    ax.set_title("estimated minimal attractor")
    ax.legend()
    fig.tight_layout()
    return _save(fig, outdir, "fig_attractor.png")


def render_decomposition(outdir: str, decomposition) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    fractions = [e.basin_fraction for e in decomposition.entries]
    labels = [f"K{i + 1}\n|K|={len(e.report.cells)}"
              for i, e in enumerate(decomposition.entries)]
    residual = 1.0 - decomposition.covered_fraction
    fractions.append(residual)
    labels.append("residual")
    ax.bar(np.arange(len(fractions)), fractions, color="steelblue")
    ax.set_xticks(np.arange(len(fractions)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("fraction of initial conditions")
    ax.set_title("basin-peeling decomposition")
    fig.tight_layout()
    return _save(fig, outdir, "fig_decomposition.png")


def render_limits(outdir: str, grid, representatives) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    edges = np.arange(grid.size + 1) / grid.size
    for k, (measure, mult) in enumerate(representatives):
        ax.stairs(measure.weights * grid.size, edges, lw=1.0,
                  label=f"rep {k} (mult {mult:.2f})")
    ax.set_xlabel("state")
    ax.set_ylabel("density w.r.t. Lebesgue")
    ax.set_title(f"SRB-like representatives ({len(representatives)})")
    if len(representatives) <= 8:
        ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, outdir, "fig_srb_like.png")
