"""Optional PNG figures rendered next to the CSV output (Agg backend)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def fit_figure(xs, ys, general_solution, spline, path) -> Path:
    plt = _pyplot()
    fig, (ax, axr) = plt.subplots(2, 1, figsize=(6.4, 5.2), sharex=True, gridspec_kw={"height_ratios": [3, 1]})
    ax.plot(xs, ys, ".", ms=2, color="0.55", label="data")
    ax.plot(xs, general_solution, lw=1.4, label="general solution")
    ax.plot(xs, spline, "--", lw=1.0, label="spline")
    ax.set_ylabel("y")
    ax.legend(frameon=False)
    axr.plot(xs, np.asarray(ys) - np.asarray(general_solution), lw=0.8, color="C3")
    axr.set_xlabel("x")
    axr.set_ylabel("residual")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def sparsity_figure(labels: Sequence[str], matrix: np.ndarray, path, title: str = "") -> Path:
    plt = _pyplot()
    m = np.atleast_2d(matrix)
    fig, ax = plt.subplots(figsize=(1.2 + 0.6 * m.shape[1], 1.0 + 0.45 * m.shape[0]))
    im = ax.imshow(m, cmap="Greys", vmin=0.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(m.shape[1]))
    ax.set_xticklabels([str(i) for i in range(m.shape[1])])
    ax.set_yticks(range(m.shape[0]))
    ax.set_yticklabels(labels)
    ax.set_xlabel("derivative order")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, fraction=0.05)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def rate_figure(components: Sequence[str], reference, recovered, path) -> Path:
    plt = _pyplot()
    x = np.arange(len(components))
    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    ax.bar(x - 0.2, reference, 0.4, label="reference")
    ax.bar(x + 0.2, recovered, 0.4, label="recovered")
    ax.set_xticks(x)
    ax.set_xticklabels(components, rotation=30, ha="right")
    ax.set_ylabel("rate constant")
    ax.set_yscale("log")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
