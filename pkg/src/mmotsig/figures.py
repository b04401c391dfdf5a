"""Matplotlib renderings for report output: eigenvalue spectra and supports."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def spectrum_figure(eigenvalues, zero_tol, title, path):
    """Stem plot of metric eigenvalues with the zero band shaded."""
    vals = np.asarray(eigenvalues, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    idx = np.arange(1, len(vals) + 1)
    colors = np.where(vals > zero_tol, "tab:blue",
                      np.where(vals < -zero_tol, "tab:red", "tab:gray"))
    ax.axhspan(-zero_tol, zero_tol, color="0.85", zorder=0)
    ax.axhline(0.0, color="0.4", linewidth=0.8)
    ax.vlines(idx, 0.0, vals, color=colors, linewidth=1.5)
    ax.scatter(idx, vals, c=colors, s=18, zorder=3)
    ax.set_xlabel("eigenvalue index")
    ax.set_ylabel("eigenvalue")
    ax.set_title(title)
    ax.set_xticks(idx)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def support_figure(support, grids, title, path):
    """Scatter of the solved support, one panel per marginal paired with the first.

    Marginals of dimension above one are shown through their first coordinate.
    Marker area scales with atom mass.
    """
    pts = support.stacked()
    dims = [g.dim for g in grids]
    offs = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    first = [pts[:, offs[i]] for i in range(len(dims))]
    masses = np.asarray(support.masses)
    m = len(dims)
    ncol = max(1, m - 1)
    fig, axes = plt.subplots(1, ncol, figsize=(3.2 * ncol, 3.2), squeeze=False)
    sizes = 400.0 * masses / masses.max()
    for j in range(1, m) if m > 1 else [0]:
        ax = axes[0][j - 1 if m > 1 else 0]
        ax.scatter(first[0], first[j if m > 1 else 0], s=sizes, alpha=0.7,
                   edgecolor="k", linewidth=0.4)
        ax.set_xlabel("marginal 1")
        ax.set_ylabel(f"marginal {j + 1 if m > 1 else 1}")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
