"""Static scatter plots of generated samples."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import as_points
from .synth import swiss_roll_embed


def scatter_2d(points, path, color=None, title: str = ""):
    """Scatter an (n, 2) point set; ``color`` maps per-point values to the
    viridis scale (used to color outputs by their source's distance from the
    origin)."""
    pts = as_points(points, "points", min_rows=1)
    if pts.shape[1] != 2:
        raise ValueError(f"scatter_2d: expected 2-D points, got d={pts.shape[1]}")
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.scatter(pts[:, 0], pts[:, 1], s=3, c=color, cmap="viridis" if color is not None else None)
    ax.set_aspect("equal", adjustable="datalim")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def histogram_1d(values, path, title: str = ""):
    vals = as_points(values, "values", min_rows=1).ravel()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(vals, bins=60)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def scatter_swiss(theta, path, color=None, title: str = ""):
    """Embed 1-D parameters on the spiral curve and scatter the result."""
    scatter_2d(swiss_roll_embed(theta), path, color=color, title=title)


def scatter_pairs(labeled, path, dims=(0, 1), title: str = ""):
    """Scatter targets colored by their source's distance from the origin."""
    color = np.linalg.norm(labeled.sources, axis=1)
    targets = labeled.targets
    if targets.shape[1] == 1:
        scatter_swiss(targets, path, color=color, title=title)
    else:
        scatter_2d(targets[:, list(dims)], path, color=color, title=title)
