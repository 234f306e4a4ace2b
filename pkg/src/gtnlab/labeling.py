"""Training-pair construction.

Three routes produce the supervised (source, target) pairs: exact rank
pairing in one dimension, greedy cosine matching over norm-sorted inputs in
any dimension, and a per-cluster variant for data with disconnected support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import LabeledDataset, as_points, center, l2_norms, sample_standard_normal

# Rows with norm below this are directionless: they score 0 against everything
# and therefore match the smallest-norm remaining candidate.
ZERO_NORM_TOL = 1e-12

# Cosine scores are compared on a grid of this spacing. Exact float64
# comparison leaves ties measure-zero on continuous data, so the norm-order
# tie-break (the mechanism that transports norms) would never engage and the
# matched radius would be independent of the source radius. The window makes
# directions within ~sqrt(2 * resolution) radians of the best candidate tie
# and resolve by norm, which is what the matching needs at realistic sample
# sizes; it is far below any angular gap that matters at desk-scale n.
COSINE_SCORE_RESOLUTION = 2.0**-12


def label_1d(d_x, d_y) -> LabeledDataset:
    """Pair the i-th smallest source with the i-th smallest target.

    Both inputs are (n, 1); the result is ordered by ascending source value.
    """
    x = as_points(d_x, "d_x", min_rows=1)
    y = as_points(d_y, "d_y", min_rows=1)
    if x.shape[1] != 1 or y.shape[1] != 1:
        raise ValueError(f"label_1d: inputs must be 1-dimensional, got d={x.shape[1]} and d={y.shape[1]}")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"label_1d: size mismatch, {x.shape[0]} targets vs {y.shape[0]} sources")
    return LabeledDataset(sources=np.sort(y, axis=0), targets=np.sort(x, axis=0))


def unit_rows(points) -> np.ndarray:
    """Rows scaled to unit norm; rows with norm < ZERO_NORM_TOL become zero rows."""
    pts = as_points(points)
    norms = np.linalg.norm(pts, axis=1)
    tiny = norms < ZERO_NORM_TOL
    safe = np.where(tiny, 1.0, norms)
    out = pts / safe[:, None]
    out[tiny] = 0.0
    return out


def _check_centered(pts: np.ndarray, name: str):
    # Statistical guard, not an exact-zero test: an honest sample from a
    # centered distribution has column means around std/sqrt(n).
    n = pts.shape[0]
    if n < 2:
        return
    stds = pts.std(axis=0)
    scale = max(1.0, float(np.abs(pts).max()))
    tol = 6.0 * stds / np.sqrt(n) + 1e-9 * scale
    worst = np.abs(pts.mean(axis=0)) - tol
    if np.any(worst > 0):
        col = int(np.argmax(worst))
        raise ValueError(
            f"label_greedy_cosine: {name} looks uncentered (column {col} mean "
            f"{pts.mean(axis=0)[col]:.4g}); run core.center first or pass check_centered=False"
        )


def label_greedy_cosine(
    d_x, d_y, check_centered: bool = True, score_resolution: float | None = COSINE_SCORE_RESOLUTION
) -> LabeledDataset:
    """Greedy cosine matching over norm-sorted inputs.

    Both samples are sorted ascending by Euclidean norm (stable, so equal
    norms keep their original row order). Sources are consumed in that
    order; each takes the remaining target with the highest cosine score,
    ties going to the earliest (smallest-norm) candidate. Scores are
    compared at ``score_resolution`` (None compares exact float64 values,
    which starves the tie-break on continuous data; see
    COSINE_SCORE_RESOLUTION). Inputs are expected centered; the guard can
    be disabled for callers that center differently.
    """
    x = as_points(d_x, "d_x", min_rows=1)
    y = as_points(d_y, "d_y", min_rows=1)
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"label_greedy_cosine: size mismatch, {x.shape[0]} targets vs {y.shape[0]} sources")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"label_greedy_cosine: dimension mismatch, d={x.shape[1]} vs d={y.shape[1]}")
    if check_centered:
        _check_centered(x, "d_x")
        _check_centered(y, "d_y")

    x_sorted = x[np.argsort(l2_norms(x), kind="stable")]
    y_sorted = y[np.argsort(l2_norms(y), kind="stable")]
    assign = kernels.greedy_assign(unit_rows(x_sorted), unit_rows(y_sorted), resolution=score_resolution)
    return LabeledDataset(sources=y_sorted, targets=x_sorted[assign])


def label_against_normal(data, rng, rescale: bool = False):
    """Center the data, draw an equal-size standard-normal source, and label.

    Returns (pairs, mean, scale); ``scale`` is the per-column std used when
    ``rescale`` is on, else None. Targets in the returned pairs are in the
    centered (and optionally rescaled) frame; invert with x*scale + mean.
    """
    x = as_points(data, "data", min_rows=1)
    centered, mean = center(x)
    scale = None
    if rescale:
        scale = centered.std(axis=0)
        scale[scale == 0.0] = 1.0
        centered = centered / scale
    y = sample_standard_normal(rng, x.shape[0], x.shape[1])
    labeled = label_greedy_cosine(centered, y, check_centered=False)
    return labeled, mean, scale


@dataclass
class ClusterModel:
    """k cluster centers with per-coordinate stds, mixture weights, and the
    training-row assignment."""

    centers: np.ndarray
    stds: np.ndarray
    weights: np.ndarray
    assignment: np.ndarray

    def __post_init__(self):
        self.centers = as_points(self.centers, "centers", min_rows=1)
        self.stds = as_points(self.stds, "stds", min_rows=1)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        k = self.centers.shape[0]
        if self.stds.shape != self.centers.shape:
            raise ValueError("ClusterModel: stds must match centers in shape")
        if self.weights.shape != (k,):
            raise ValueError("ClusterModel: one weight per cluster required")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("ClusterModel: weights must be positive and sum to 1 within 1e-12")
        if self.assignment.size and (self.assignment.min() < 0 or self.assignment.max() >= k):
            raise ValueError("ClusterModel: assignment indices out of range")

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]


def _nearest_center(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def fit_clusters(rng, data, k: int, max_iters: int = 100) -> ClusterModel:
    """Lloyd's k-means with k-means++-style seeding from the given generator.

    An empty cluster is reseeded from the point currently farthest from its
    assigned center. Weights are cluster sizes over n.
    """
    x = as_points(data, "data", min_rows=1)
    n = x.shape[0]
    if k < 1:
        raise ValueError(f"fit_clusters: need k >= 1, got {k}")
    if n < k:
        raise ValueError(f"fit_clusters: need at least k={k} points, got {n}")

    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    for i in range(1, k):
        d2 = ((x[:, None, :] - centers[None, :i, :]) ** 2).sum(axis=2).min(axis=1)
        total = d2.sum()
        if total == 0.0:
            centers[i] = x[rng.integers(n)]
        else:
            centers[i] = x[rng.choice(n, p=d2 / total)]

    assign = _nearest_center(x, centers)
    for _ in range(max_iters):
        new_centers = centers.copy()
        for c in range(k):
            mask = assign == c
            if mask.any():
                new_centers[c] = x[mask].mean(axis=0)
            else:
                dist2 = ((x - centers[assign]) ** 2).sum(axis=1)
                new_centers[c] = x[int(np.argmax(dist2))]
        new_assign = _nearest_center(x, new_centers)
        converged = np.array_equal(new_assign, assign) and np.allclose(new_centers, centers)
        centers, assign = new_centers, new_assign
        if converged:
            break

    stds = np.empty_like(centers)
    weights = np.empty(k)
    for c in range(k):
        mask = assign == c
        weights[c] = mask.mean()
        stds[c] = x[mask].std(axis=0) if mask.any() else 0.0
    return ClusterModel(centers=centers, stds=stds, weights=weights / weights.sum(), assignment=assign)


def label_clustered(rng, data, clusters: ClusterModel):
    """Greedy labeling run independently inside each cluster.

    For cluster c with n_c points, n_c sources are drawn from
    N(center_c, diag(std_c^2)); both sides are shifted to the cluster frame,
    matched, and shifted back. Pairs from all clusters are concatenated with
    their cluster index. Returns (pairs, clusters).
    """
    x = as_points(data, "data", min_rows=1)
    if x.shape[1] != clusters.d:
        raise ValueError(f"label_clustered: data dimension {x.shape[1]} != cluster dimension {clusters.d}")
    assign = _nearest_center(x, clusters.centers)

    sources, targets, cluster_col = [], [], []
    for c in range(clusters.k):
        pts = x[assign == c]
        n_c = pts.shape[0]
        if n_c < 2:
            raise ValueError(
                f"label_clustered: cluster {c} has {n_c} point(s); labeling needs >= 2, use a smaller k"
            )
        y = clusters.centers[c] + rng.standard_normal((n_c, clusters.d)) * clusters.stds[c]
        pairs = label_greedy_cosine(pts - clusters.centers[c], y - clusters.centers[c], check_centered=False)
        sources.append(pairs.sources + clusters.centers[c])
        targets.append(pairs.targets + clusters.centers[c])
        cluster_col.append(np.full(n_c, c, dtype=np.int64))

    labeled = LabeledDataset(
        sources=np.concatenate(sources),
        targets=np.concatenate(targets),
        clusters=np.concatenate(cluster_col),
    )
    return labeled, clusters
