"""Synthetic data generators and the 1-D/radial transport oracles used as test ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .core import as_points


@dataclass(frozen=True)
class SwissRollSpec:
    """Angular range of the spiral curve theta -> theta*(cos theta, sin theta)."""

    theta_min: float = 1.5 * math.pi
    theta_max: float = 4.5 * math.pi

    def __post_init__(self):
        if not self.theta_min < self.theta_max:
            raise ValueError("SwissRollSpec: theta_min must be < theta_max")


@dataclass
class UniformBoxSpec:
    """Axis-aligned box with independent uniform coordinates."""

    lows: np.ndarray
    highs: np.ndarray

    def __post_init__(self):
        self.lows = np.atleast_1d(np.asarray(self.lows, dtype=np.float64))
        self.highs = np.atleast_1d(np.asarray(self.highs, dtype=np.float64))
        if self.lows.shape != self.highs.shape or self.lows.ndim != 1:
            raise ValueError("UniformBoxSpec: lows and highs must be 1-D and equal length")
        if not np.all(self.lows < self.highs):
            raise ValueError("UniformBoxSpec: need lows[i] < highs[i] for every coordinate")

    @property
    def d(self) -> int:
        return self.lows.size

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        pts = as_points(points)
        return ((pts >= self.lows - margin) & (pts <= self.highs + margin)).all(axis=1)


def _boxes_overlap(a: UniformBoxSpec, b: UniformBoxSpec) -> bool:
    return bool(np.all((a.lows < b.highs) & (b.lows < a.highs)))


@dataclass
class DisjointUniformSpec:
    """Mixture of pairwise-disjoint uniform boxes with weights summing to 1."""

    boxes: list
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if len(self.boxes) < 1:
            raise ValueError("DisjointUniformSpec: need at least one box")
        if self.weights is None:
            self.weights = np.full(len(self.boxes), 1.0 / len(self.boxes))
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(self.boxes),):
            raise ValueError("DisjointUniformSpec: one weight per box required")
        if np.any(self.weights < 0):
            raise ValueError("DisjointUniformSpec: weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("DisjointUniformSpec: weights must sum to 1 within 1e-12")
        dims = {box.d for box in self.boxes}
        if len(dims) != 1:
            raise ValueError("DisjointUniformSpec: all boxes must share one dimension")
        for i in range(len(self.boxes)):
            for j in range(i + 1, len(self.boxes)):
                if _boxes_overlap(self.boxes[i], self.boxes[j]):
                    raise ValueError(f"DisjointUniformSpec: boxes {i} and {j} overlap")

    @property
    def d(self) -> int:
        return self.boxes[0].d


def sample_swiss_roll_theta(rng, n: int, spec: SwissRollSpec | None = None) -> np.ndarray:
    """n uniform draws of the spiral parameter, as an (n, 1) point set."""
    if n < 1:
        raise ValueError(f"sample_swiss_roll_theta: need n >= 1, got {n}")
    spec = spec or SwissRollSpec()
    return rng.uniform(spec.theta_min, spec.theta_max, size=(n, 1))


def swiss_roll_embed(theta) -> np.ndarray:
    """Map parameters to the plane: row i becomes (theta_i cos theta_i, theta_i sin theta_i)."""
    t = as_points(theta, "theta")
    if t.shape[1] != 1:
        raise ValueError("swiss_roll_embed: expected 1-dimensional input")
    t = t[:, 0]
    return np.column_stack([t * np.cos(t), t * np.sin(t)])


def sample_uniform_box(rng, n: int, spec: UniformBoxSpec) -> np.ndarray:
    """n i.i.d. uniform draws from the box."""
    if n < 1:
        raise ValueError(f"sample_uniform_box: need n >= 1, got {n}")
    return rng.uniform(spec.lows, spec.highs, size=(n, spec.d))


def sample_disjoint_uniform(rng, n: int, spec: DisjointUniformSpec):
    """Draw from the box mixture; returns (points, box index per row)."""
    if n < 1:
        raise ValueError(f"sample_disjoint_uniform: need n >= 1, got {n}")
    labels = rng.choice(len(spec.boxes), size=n, p=spec.weights)
    lows = np.stack([box.lows for box in spec.boxes])
    highs = np.stack([box.highs for box in spec.boxes])
    u = rng.uniform(size=(n, spec.d))
    points = lows[labels] + u * (highs[labels] - lows[labels])
    return points, labels


def analytic_h_normal_to_uniform(y):
    """Standard normal CDF, the exact map sending N(0,1) onto U(0,1).

    Computed through double-precision erf; absolute error is far below the
    1e-7 the tests rely on.
    """
    out = special.ndtr(np.asarray(y, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


def empirical_h_1d_oracle(samples_x, samples_y, y):
    """Quantile-matching transport estimated from two 1-D samples.

    Reads off y's level under the empirical CDF of ``samples_y`` and returns
    the same level's value under ``samples_x``, interpolating linearly
    between order statistics (level of the i-th smallest = i/(n-1)).
    Outside the sampled range the result clamps to the extreme order
    statistics.
    """
    sx = np.sort(as_points(samples_x, "samples_x", min_rows=2).ravel())
    sy = np.sort(as_points(samples_y, "samples_y", min_rows=2).ravel())
    y_arr = np.asarray(y, dtype=np.float64)
    levels_y = np.linspace(0.0, 1.0, sy.size)
    levels_x = np.linspace(0.0, 1.0, sx.size)
    q = np.interp(y_arr, sy, levels_y)
    out = np.interp(q, levels_x, sx)
    return float(out) if out.ndim == 0 else out


def radial_h_oracle(norms_x, norms_y, y) -> np.ndarray:
    """Transport for rotation-invariant distributions: move |y| by the 1-D
    norm transport, keep the direction y/|y|; the origin maps to itself."""
    y = np.asarray(y, dtype=np.float64).ravel()
    r = np.linalg.norm(y)
    if r == 0.0:
        return np.zeros_like(y)
    h1 = empirical_h_1d_oracle(norms_x, norms_y, r)
    return (h1 / r) * y
