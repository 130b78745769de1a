"""Figures rendered next to the CSV/JSONL outputs of the CLI."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _style(ax):
    ax.grid(True, alpha=0.3, linewidth=0.5)
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)


def plot_convergence(traces: dict, path, title: str | None = None) -> Path:
    """Best value against number of requests, one panel per problem.

    ``traces`` maps a problem label to a list of RunTrace (one per seed).
    Panels whose values are all positive use a log y-axis.
    """
    labels = list(traces)
    ncols = min(4, len(labels))
    nrows = math.ceil(len(labels) / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.2 * ncols, 2.6 * nrows), squeeze=False)
    for ax, label in zip(axes.flat, labels):
        finite_all = []
        runs = traces[label]
        for j, trace in enumerate(runs):
            evals = [r.evals for r in trace]
            best = np.array([r.best_y for r in trace], dtype=float)
            ax.step(evals, best, where="post", linewidth=1.0, label=f"run {j}")
            finite_all.extend(best[np.isfinite(best)])
        if 1 < len(runs) <= 10:
            ax.legend(fontsize=6)
        if finite_all and min(finite_all) > 0:
            ax.set_yscale("log")
        ax.set_title(label, fontsize=9)
        ax.set_xlabel("requests", fontsize=8)
        ax.set_ylabel("best value", fontsize=8)
        ax.tick_params(labelsize=7)
        _style(ax)
    for ax in list(axes.flat)[len(labels):]:
        ax.set_visible(False)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_sweep(rows: list[dict], path, value: str = "mean_best") -> Path:
    """Sweep results as ``value`` against K, one line per k, one panel per rank."""
    ranks = sorted({r["R"] for r in rows})
    fig, axes = plt.subplots(1, len(ranks), figsize=(3.4 * len(ranks), 2.8), squeeze=False)
    for ax, R in zip(axes[0], ranks):
        sub = [r for r in rows if r["R"] == R]
        for k in sorted({r["k"] for r in sub}):
            pts = sorted((r["K"], r[value]) for r in sub if r["k"] == k)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", markersize=3, label=f"k={k}")
        ax.set_title(f"R={R}", fontsize=9)
        ax.set_xlabel("K", fontsize=8)
        ax.set_ylabel(value, fontsize=8)
        ax.tick_params(labelsize=7)
        ax.legend(fontsize=7)
        _style(ax)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
