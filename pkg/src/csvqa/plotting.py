"""Matplotlib figure helpers for evaluation reports. Figures go straight to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.dpi": 150,
}


def _figure(width=4.5, ratio=0.75):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, width * ratio))
    return fig, ax


def _save(fig, path):
    with plt.rc_context(STYLE):
        fig.tight_layout()
        fig.savefig(path)
    plt.close(fig)


def scatter_fit(objective, subjective, mapping, path, title=""):
    """Objective vs. subjective scores with the fitted mapping curve."""
    x = np.asarray(objective, dtype=float)
    y = np.asarray(subjective, dtype=float)
    fig, ax = _figure()
    ax.scatter(x, y, s=6, alpha=0.6, color="tab:blue", edgecolors="none")
    grid = np.linspace(x.min(), x.max(), 200)
    ax.plot(grid, mapping(grid), color="tab:red", lw=1.2, label="fit")
    ax.set_xlabel("objective score")
    ax.set_ylabel("subjective score")
    ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, path)


def histogram_pair(subjective, regressed, edges, path, title=""):
    """Overlaid histograms of subjective and regressed objective scores."""
    fig, ax = _figure()
    ax.hist(subjective, bins=edges, alpha=0.5, label="subjective", color="tab:gray")
    ax.hist(regressed, bins=edges, alpha=0.5, label="regressed", color="tab:orange")
    ax.set_xlabel("score")
    ax.set_ylabel("count")
    ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, path)
