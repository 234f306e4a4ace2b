"""Statistical checks for generated samples.

Classical two-sample statistics (Kolmogorov-Smirnov, Pearson chi-square on a
grid, energy distance), distance-to-manifold for the spiral curve, coverage
against held-out data, and continuity/monotonicity probes of a trained map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .core import as_points
from .net import MlpModel, predict
from .synth import SwissRollSpec

ENERGY_MAX_POINTS = 5000  # exact O(n^2) sums above this use seeded subsampling


@dataclass
class GridSpec:
    """Regular binning grid over an axis-aligned box."""

    bins_per_axis: int
    lows: np.ndarray
    highs: np.ndarray

    def __post_init__(self):
        if self.bins_per_axis < 2:
            raise ValueError("GridSpec: bins_per_axis must be >= 2")
        self.lows = np.atleast_1d(np.asarray(self.lows, dtype=np.float64))
        self.highs = np.atleast_1d(np.asarray(self.highs, dtype=np.float64))
        if self.lows.shape != self.highs.shape or not np.all(self.lows < self.highs):
            raise ValueError("GridSpec: need lows < highs componentwise")

    @property
    def d(self) -> int:
        return self.lows.size


def _as_1d_sample(sample, name: str) -> np.ndarray:
    pts = as_points(sample, name)
    if pts.shape[1] != 1:
        raise ValueError(f"{name}: expected 1-D data, got d={pts.shape[1]}")
    return pts.ravel()


def ks_statistic(sample, reference) -> float:
    """Kolmogorov-Smirnov sup-distance.

    ``reference`` is either a vectorized CDF callable (one-sample, exact
    sup over the empirical CDF steps) or a second sample (two-sample, exact
    sup over the merged points).
    """
    s = np.sort(_as_1d_sample(sample, "sample"))
    n = s.size
    if n < 10:
        raise ValueError(f"ks_statistic: sample too small (n={n} < 10)")
    if callable(reference):
        f = np.asarray(reference(s), dtype=np.float64)
        steps = np.arange(n + 1) / n
        return float(max((steps[1:] - f).max(), (f - steps[:-1]).max(), 0.0))
    r = np.sort(_as_1d_sample(reference, "reference"))
    if r.size < 10:
        raise ValueError(f"ks_statistic: reference too small (n={r.size} < 10)")
    grid = np.concatenate([s, r])
    f_s = np.searchsorted(s, grid, side="right") / n
    f_r = np.searchsorted(r, grid, side="right") / r.size
    return float(np.abs(f_s - f_r).max())


def grid_chi_square(sample, grid: GridSpec):
    """Pearson chi-square of the in-box points against the uniform expectation.

    Returns (statistic, dof, out_of_box_fraction); points outside the box are
    excluded from the counts and reported separately. Bins are half-open with
    the top edge closed.
    """
    pts = as_points(sample, "sample", min_rows=1)
    if pts.shape[1] != grid.d:
        raise ValueError(f"grid_chi_square: sample dimension {pts.shape[1]} != grid dimension {grid.d}")
    b = grid.bins_per_axis
    inside = ((pts >= grid.lows) & (pts <= grid.highs)).all(axis=1)
    oob_fraction = float(1.0 - inside.mean())
    n_cells = b ** grid.d
    dof = n_cells - 1
    pin = pts[inside]
    if pin.shape[0] == 0:
        return 0.0, dof, oob_fraction
    widths = (grid.highs - grid.lows) / b
    idx = np.clip(((pin - grid.lows) / widths).astype(np.int64), 0, b - 1)
    flat = np.zeros(pin.shape[0], dtype=np.int64)
    for k in range(grid.d):
        flat = flat * b + idx[:, k]
    counts = np.bincount(flat, minlength=n_cells)
    expected = pin.shape[0] / n_cells
    stat = float(((counts - expected) ** 2 / expected).sum())
    return stat, dof, oob_fraction


def _spiral_dist2(px, py, theta):
    dx = px - theta * np.cos(theta)
    dy = py - theta * np.sin(theta)
    return dx * dx + dy * dy


def manifold_distance_swiss(points, spec: SwissRollSpec | None = None, grid_resolution: int = 10000) -> np.ndarray:
    """Per-point Euclidean distance to the spiral curve theta*(cos, sin).

    A dense global theta grid isolates the right spiral arm; a vectorized
    golden-section pass then refines inside the bracketing grid interval.
    """
    pts = as_points(points, "points", min_rows=1)
    if pts.shape[1] != 2:
        raise ValueError(f"manifold_distance_swiss: expected 2-D points, got d={pts.shape[1]}")
    spec = spec or SwissRollSpec()
    if grid_resolution < 3:
        raise ValueError("manifold_distance_swiss: grid_resolution must be >= 3")

    thetas = np.linspace(spec.theta_min, spec.theta_max, grid_resolution)
    curve = np.column_stack([thetas * np.cos(thetas), thetas * np.sin(thetas)])
    px, py = pts[:, 0], pts[:, 1]

    best = np.full(pts.shape[0], np.inf)
    best_j = np.zeros(pts.shape[0], dtype=np.int64)
    chunk = max(1, (1 << 22) // grid_resolution)
    for start in range(0, pts.shape[0], chunk):
        stop = min(start + chunk, pts.shape[0])
        d2 = cdist(pts[start:stop], curve, metric="sqeuclidean")
        best_j[start:stop] = np.argmin(d2, axis=1)
        best[start:stop] = d2[np.arange(stop - start), best_j[start:stop]]

    a = thetas[np.maximum(best_j - 1, 0)]
    b = thetas[np.minimum(best_j + 1, grid_resolution - 1)]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = _spiral_dist2(px, py, c)
    fd = _spiral_dist2(px, py, d)
    for _ in range(48):
        take_left = fc < fd
        a = np.where(take_left, a, c)
        b = np.where(take_left, d, b)
        old_c, old_fc = c, fc
        old_d, old_fd = d, fd
        c = np.where(take_left, b - invphi * (b - a), old_d)
        d = np.where(take_left, old_c, a + invphi * (b - a))
        fresh = np.where(take_left, c, d)
        f_fresh = _spiral_dist2(px, py, fresh)
        fc = np.where(take_left, f_fresh, old_fd)
        fd = np.where(take_left, old_fc, f_fresh)
    refined = np.minimum(fc, fd)
    return np.sqrt(np.minimum(best, refined))


def energy_distance(sample_a, sample_b, seed: int = 0) -> float:
    """2 E|A-B| - E|A-A'| - E|B-B'| over exact double sums.

    Sides larger than ENERGY_MAX_POINTS are subsampled with the given seed so
    the O(n^2) computation stays at desk scale.
    """
    a = as_points(sample_a, "sample_a")
    b = as_points(sample_b, "sample_b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"energy_distance: dimension mismatch {a.shape[1]} vs {b.shape[1]}")
    if a.shape[0] < 10 or b.shape[0] < 10:
        raise ValueError("energy_distance: both samples need at least 10 points")
    rng = np.random.default_rng(seed)
    if a.shape[0] > ENERGY_MAX_POINTS:
        a = a[rng.choice(a.shape[0], ENERGY_MAX_POINTS, replace=False)]
    if b.shape[0] > ENERGY_MAX_POINTS:
        b = b[rng.choice(b.shape[0], ENERGY_MAX_POINTS, replace=False)]
    ab = cdist(a, b).mean()
    aa = cdist(a, a).mean()
    bb = cdist(b, b).mean()
    return float(2.0 * ab - aa - bb)


def coverage_score(generated, held_out, radius: float) -> float:
    """Fraction of held-out points with a generated neighbor within radius."""
    gen = as_points(generated, "generated")
    ref = as_points(held_out, "held_out", min_rows=1)
    if gen.shape[0] and gen.shape[1] != ref.shape[1]:
        raise ValueError(f"coverage_score: dimension mismatch {gen.shape[1]} vs {ref.shape[1]}")
    if gen.shape[0] == 0:
        return 0.0
    dist, _ = cKDTree(gen).query(ref, k=1)
    return float((dist <= radius).mean())


def _as_map(model):
    if isinstance(model, MlpModel):
        return lambda arr: predict(model, arr)
    if callable(model):
        return model
    raise TypeError("expected an MlpModel or a callable")


def interpolation_continuity(model, y_left, y_right, steps: int) -> float:
    """Largest output displacement between consecutive points of the segment.

    The map is evaluated at ``steps`` linearly spaced mixtures
    lam*y_left + (1-lam)*y_right.
    """
    if steps < 2:
        raise ValueError("interpolation_continuity: steps must be >= 2")
    y_left = np.asarray(y_left, dtype=np.float64).ravel()
    y_right = np.asarray(y_right, dtype=np.float64).ravel()
    lam = np.linspace(0.0, 1.0, steps)[:, None]
    line = lam * y_left + (1.0 - lam) * y_right
    out = np.asarray(_as_map(model)(line))
    hops = np.linalg.norm(np.diff(out, axis=0), axis=1)
    return float(hops.max())


def monotonicity_violations(model, grid) -> float:
    """Fraction of adjacent pairs on a sorted 1-D grid whose outputs invert.

    Ties do not count as violations.
    """
    g = as_points(grid, "grid", min_rows=2)
    if g.shape[1] != 1:
        raise ValueError("monotonicity_violations: grid must be 1-D")
    if np.any(np.diff(g[:, 0]) < 0):
        raise ValueError("monotonicity_violations: grid must be sorted ascending")
    out = np.asarray(_as_map(model)(g)).ravel()
    return float(np.count_nonzero(out[1:] < out[:-1]) / (out.size - 1))
