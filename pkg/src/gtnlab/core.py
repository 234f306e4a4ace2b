"""Shared data model, seeded random streams, and small numeric utilities."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Return a seeded PCG64 generator.

    The same seed plus the same call sequence reproduces the stream bit for
    bit on every platform; normal variates use numpy's ziggurat sampler.
    """
    return np.random.default_rng(seed)


def spawn_rngs(seed: int, k: int) -> list[np.random.Generator]:
    """Derive ``k`` statistically independent child generators from one seed.

    Children are ordered and deterministic, so parallel or multi-phase work
    can split randomness without sharing generator state.
    """
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(k)]


def as_points(data, name: str = "points", min_rows: int = 0) -> np.ndarray:
    """Validate and return a point set as an (n, d) float64 array.

    1-D input is treated as a single column. Rejects non-finite entries and
    empty dimensions.
    """
    pts = np.asarray(data, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise ValueError(f"{name}: expected a 2-D array of row vectors, got ndim={pts.ndim}")
    if pts.shape[0] < min_rows:
        raise ValueError(f"{name}: need at least {min_rows} rows, got {pts.shape[0]}")
    if pts.shape[0] > 0 and pts.shape[1] < 1:
        raise ValueError(f"{name}: dimension must be >= 1")
    if not np.isfinite(pts).all():
        raise ValueError(f"{name}: contains NaN or Inf entries")
    return pts


def sample_standard_normal(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Draw n i.i.d. standard-normal d-vectors."""
    if n < 1 or d < 1:
        raise ValueError(f"sample_standard_normal: need n >= 1 and d >= 1, got n={n}, d={d}")
    return rng.standard_normal((n, d))


def l2_norms(points) -> np.ndarray:
    """Euclidean norm of every row."""
    return np.linalg.norm(as_points(points), axis=1)


def cosine_similarity(a, b) -> float:
    """a.b / (|a||b|), clamped to [-1, 1] against round-off."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"cosine_similarity: shape mismatch {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0:
        raise ValueError("cosine_similarity: argument 'a' has zero norm")
    if nb == 0.0:
        raise ValueError("cosine_similarity: argument 'b' has zero norm")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def center(points) -> tuple[np.ndarray, np.ndarray]:
    """Subtract the column mean; returns (centered, mean) so the shift can be undone."""
    pts = as_points(points, min_rows=1)
    mean = pts.mean(axis=0)
    return pts - mean, mean


@dataclass
class LabeledDataset:
    """Aligned (source, target) training pairs in a common dimension.

    ``targets`` is a row permutation of the raw data, so pairing is a
    bijection. ``clusters`` optionally records which cluster produced each
    pair for the per-cluster labeling path.
    """

    sources: np.ndarray
    targets: np.ndarray
    clusters: np.ndarray | None = None

    def __post_init__(self):
        self.sources = as_points(self.sources, "sources", min_rows=1)
        self.targets = as_points(self.targets, "targets", min_rows=1)
        if self.sources.shape != self.targets.shape:
            raise ValueError(
                f"LabeledDataset: sources {self.sources.shape} and targets "
                f"{self.targets.shape} must have identical shape"
            )
        if self.clusters is not None:
            self.clusters = np.asarray(self.clusters, dtype=np.int64)
            if self.clusters.shape != (self.sources.shape[0],):
                raise ValueError("LabeledDataset: clusters must have one entry per pair")

    @property
    def n(self) -> int:
        return self.sources.shape[0]

    @property
    def d(self) -> int:
        return self.sources.shape[1]


@dataclass
class MetricsReport:
    """Named scalar statistics, each with the sample size and seed behind it."""

    entries: dict = field(default_factory=dict)

    def add(self, name: str, value, n: int, seed: int):
        value = float(value)
        if not np.isfinite(value):
            raise ValueError(f"MetricsReport: metric {name!r} is not finite ({value})")
        self.entries[name] = {"value": value, "n": int(n), "seed": int(seed)}

    def value(self, name: str) -> float:
        return self.entries[name]["value"]

    def to_json(self) -> str:
        return json.dumps(self.entries, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        report = cls()
        for name, entry in json.loads(text).items():
            report.add(name, entry["value"], entry["n"], entry["seed"])
        return report
