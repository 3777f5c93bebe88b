"""Matplotlib renderings of the report tables.

Each report path (evaluate, tune, stats) can write a figure next to its
delimited output.  Rendering is headless (Agg) and deterministic.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .corpus import DatasetStats
from .metrics import EvalReport
from .tuner import GridSearchResult

__all__ = ["render_eval_figure", "render_grid_figure", "render_stats_figure"]


def render_eval_figure(report: EvalReport, path: str) -> None:
    """Grouped bar chart of WER/CER per group plus the overall rates."""
    names = sorted(report.groups) + ["overall"]
    wers = [report.groups[n].wer_percent if n != "overall" else report.wer_percent for n in names]
    cers = [report.groups[n].cer_percent if n != "overall" else report.cer_percent for n in names]
    x = np.arange(len(names))
    width = 0.38

    fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(names)), 3.2))
    ax.bar(x - width / 2, wers, width, label="WER", color="#33557a")
    ax.bar(x + width / 2, cers, width, label="CER", color="#a8c0d8")
    for xi, value in zip(x, wers):
        ax.text(xi - width / 2, value, f"{value:.2f}", ha="center", va="bottom", fontsize=8)
    for xi, value in zip(x, cers):
        ax.text(xi + width / 2, value, f"{value:.2f}", ha="center", va="bottom", fontsize=8)
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("error rate (%)")
    ax.set_title(f"WER / CER by {report.group_by}")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_grid_figure(result: GridSearchResult, path: str) -> None:
    """Heatmap of WER over the (alpha, beta) grid; the best cell is marked."""
    alphas = sorted({alpha for alpha, _, _ in result.table})
    betas = sorted({beta for _, beta, _ in result.table})
    grid = np.full((len(alphas), len(betas)), np.nan)
    for alpha, beta, cell_wer in result.table:
        grid[alphas.index(alpha), betas.index(beta)] = cell_wer

    fig, ax = plt.subplots(figsize=(0.55 * len(betas) + 2.2, 0.5 * len(alphas) + 1.8))
    image = ax.imshow(grid, cmap="viridis_r", aspect="auto")
    ax.set_xticks(range(len(betas)))
    ax.set_xticklabels([f"{b:g}" for b in betas], rotation=45, ha="right")
    ax.set_yticks(range(len(alphas)))
    ax.set_yticklabels([f"{a:g}" for a in alphas])
    ax.set_xlabel("beta")
    ax.set_ylabel("alpha")
    ax.set_title("grid-search WER (%)")
    best_row = alphas.index(result.best_alpha)
    best_col = betas.index(result.best_beta)
    ax.plot(best_col, best_row, marker="*", markersize=14, color="white", markeredgecolor="black")
    fig.colorbar(image, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_stats_figure(stats: DatasetStats, path: str) -> None:
    """Horizontal bars of hours per group, annotated with sample counts."""
    keys = sorted(stats.rows)
    labels = [" / ".join(key) if key else "all" for key in keys]
    hours = [stats.rows[key][0] for key in keys]
    samples = [stats.rows[key][1] for key in keys]

    fig, ax = plt.subplots(figsize=(6.0, max(2.2, 0.45 * len(keys) + 1.2)))
    y = np.arange(len(keys))
    ax.barh(y, hours, color="#4a7c59")
    for yi, (h, s) in enumerate(zip(hours, samples)):
        ax.text(h, yi, f" {h:.2f} h / {s:,}", va="center", fontsize=8)
    ax.set_yticks(y)
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlabel("hours")
    ax.set_title(f"dataset size by {', '.join(stats.group_by) or 'total'}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
