"""Figure rendering for run and sweep artifacts (PNG files, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["trajectory_figure", "balance_figure", "sweep_figure",
           "sweep_jump_times_figure"]


def trajectory_figure(model, curve, path, title=""):
    fig, ax = plt.subplots(figsize=(7, 4))
    for k in range(curve.dim):
        ax.step(curve.times, curve.values[:, k], where="post", lw=1.0,
                label=f"u_{k+1}")
    for j in curve.jumps:
        ax.axvline(j.t, color="crimson", ls=":", lw=0.8)
        ax.plot([j.t, j.t], [j.left[0], j.right[0]], color="crimson", lw=1.5)
    ax.set_xlabel("t")
    ax.set_ylabel("state")
    if title:
        ax.set_title(title)
    if curve.dim > 1:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def balance_figure(reports, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    for concept, rep in sorted(reports.items()):
        ax.plot(rep.energy_residual_times, rep.energy_residuals, lw=1.0,
                label=f"{concept} balance residual")
    ax.set_xlabel("t")
    ax.set_ylabel("|LHS - RHS|")
    ax.set_yscale("symlog", linthresh=1e-12)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def sweep_figure(result, path):
    mus = [e.mu for e in result.entries]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.loglog(mus, [max(e.sup_distance, 1e-16) for e in result.entries],
              "o-", label="sup distance")
    ax.loglog(mus, [max(e.max_energy_gap, 1e-16) for e in result.entries],
              "s--", label="max energy gap")
    ax.set_xlabel("mu")
    ax.set_ylabel(f"gap to {result.reference} reference")
    ax.set_title(f"mu-{result.direction} sweep "
                 f"({result.trend_inversions} trend inversions)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def sweep_jump_times_figure(result, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    for e in result.entries:
        for t in e.jump_times:
            ax.semilogx(e.mu, t, "o", color="steelblue")
    for t in result.reference_jump_times:
        ax.axhline(t, color="gray", ls="--", lw=0.8,
                   label=f"{result.reference} jump")
    handles, labels = ax.get_legend_handles_labels()
    if handles:
        ax.legend(handles[:1], labels[:1], loc="best", fontsize=8)
    ax.set_xlabel("mu")
    ax.set_ylabel("jump time")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
