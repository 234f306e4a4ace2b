"""Reproducible end-to-end experiment runs.

Each run executes generate-data -> label -> train -> sample -> eval -> plot
with every phase on its own derived random stream, and writes samples.csv,
pairs.csv, model.bin, metrics.json, manifest.json, and a scatter plot into
the output directory. Re-running a manifest's config reproduces the CSV
outputs byte for byte.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, csvio, plots
from .core import LabeledDataset, MetricsReport, sample_standard_normal, spawn_rngs
from .labeling import (
    fit_clusters,
    label_1d,
    label_against_normal,
    label_clustered,
    label_greedy_cosine,
)
from .metrics import (
    GridSpec,
    coverage_score,
    energy_distance,
    grid_chi_square,
    ks_statistic,
    manifold_distance_swiss,
    monotonicity_violations,
)
from .net import (
    MixtureSource,
    MlpConfig,
    MlpModel,
    TrainConfig,
    init_model,
    predict,
    sample_source,
    save_model,
    train,
)
from .synth import (
    DisjointUniformSpec,
    SwissRollSpec,
    UniformBoxSpec,
    sample_disjoint_uniform,
    sample_swiss_roll_theta,
    sample_uniform_box,
    swiss_roll_embed,
)

EXPERIMENTS = ("swiss1d", "uniform2d", "disjoint_uniform", "custom")

# Acceptance tolerances shared by eval batteries.
INSIDE_MARGIN = 0.05
MANIFOLD_DISTANCE_THRESHOLD = 0.05
COVERAGE_RADIUS = 0.05

UNIT_SQUARE = UniformBoxSpec(lows=[0.0, 0.0], highs=[1.0, 1.0])


def disjoint_boxes_spec() -> DisjointUniformSpec:
    """Two unit boxes separated by a gap of 3 along the first axis."""
    return DisjointUniformSpec(
        boxes=[
            UniformBoxSpec(lows=[0.0, 0.0], highs=[1.0, 1.0]),
            UniformBoxSpec(lows=[4.0, 0.0], highs=[5.0, 1.0]),
        ],
        weights=[0.5, 0.5],
    )


@dataclass
class ExperimentConfig:
    experiment: str
    n_train: int
    n_val: int
    n_generate: int
    seed: int
    mlp: MlpConfig
    train: TrainConfig
    clusters: int | None = None
    data_path: str | None = None
    out_dir: str = "."
    plot_format: str = "png"
    rescale: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"ExperimentConfig: unknown experiment {self.experiment!r}")
        for name in ("n_train", "n_val", "n_generate"):
            if getattr(self, name) < 1:
                raise ValueError(f"ExperimentConfig: {name} must be positive")
        if self.clusters is not None and self.clusters < 1:
            raise ValueError("ExperimentConfig: clusters must be >= 1")
        if self.plot_format not in ("png", "svg"):
            raise ValueError(f"ExperimentConfig: plot_format must be png or svg, got {self.plot_format!r}")

    def to_dict(self) -> dict:
        out = asdict(self)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        data["mlp"] = MlpConfig(**data["mlp"])
        data["train"] = TrainConfig(**data["train"])
        return cls(**data)


def preset_config(experiment: str, out_dir, seed: int = 7) -> ExperimentConfig:
    """Published recipe per experiment; every field can be overridden afterwards."""
    out_dir = str(out_dir)
    if experiment == "swiss1d":
        return ExperimentConfig(
            experiment="swiss1d",
            n_train=50000,
            n_val=10000,
            n_generate=10000,
            seed=seed,
            mlp=MlpConfig(1, 1, hidden_layers=4, width=6, leaky_slope=0.5, batch_norm=False, seed=seed),
            train=TrainConfig(
                learning_rate=1e-3, batch_size=250, max_epochs=400, patience=60, plateau_patience=20
            ),
            out_dir=out_dir,
        )
    if experiment == "uniform2d":
        return ExperimentConfig(
            experiment="uniform2d",
            n_train=100000,
            n_val=10000,
            n_generate=10000,
            seed=seed,
            mlp=MlpConfig(2, 2, hidden_layers=6, width=6, leaky_slope=0.5, batch_norm=False, seed=seed),
            train=TrainConfig(
                learning_rate=1e-3, batch_size=250, max_epochs=3000, patience=300, plateau_patience=50
            ),
            out_dir=out_dir,
        )
    if experiment == "disjoint_uniform":
        return ExperimentConfig(
            experiment="disjoint_uniform",
            n_train=20000,
            n_val=4000,
            n_generate=10000,
            seed=seed,
            mlp=MlpConfig(2, 2, hidden_layers=6, width=6, leaky_slope=0.5, batch_norm=False, seed=seed),
            train=TrainConfig(
                learning_rate=1e-3, batch_size=250, max_epochs=1500, patience=250, plateau_patience=40
            ),
            clusters=2,
            out_dir=out_dir,
        )
    if experiment == "custom":
        return ExperimentConfig(
            experiment="custom",
            n_train=1,  # replaced by the row count of the loaded data
            n_val=1000,
            n_generate=10000,
            seed=seed,
            mlp=MlpConfig(1, 1, hidden_layers=6, width=64, leaky_slope=0.5, batch_norm=False, seed=seed),
            train=TrainConfig(learning_rate=1e-3, batch_size=250, max_epochs=400, patience=30),
            out_dir=out_dir,
        )
    raise ValueError(f"preset_config: unknown experiment {experiment!r}")


@dataclass
class RunManifest:
    experiment: str
    version: str
    config: dict
    timings_s: dict
    outputs: dict
    metrics: dict
    history: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


class _Phases:
    def __init__(self):
        self.timings = {}

    def run(self, name, fn):
        t0 = time.perf_counter()
        result = fn()
        self.timings[name] = time.perf_counter() - t0
        return result


def _swiss_metrics(cfg, model, generated, r_eval) -> MetricsReport:
    report = MetricsReport()
    fresh = sample_swiss_roll_theta(r_eval, cfg.n_generate)
    report.add("ks_theta", ks_statistic(generated, fresh), cfg.n_generate, cfg.seed)
    grid = np.linspace(-3.0, 3.0, 1001).reshape(-1, 1)
    report.add("monotonicity_violations", monotonicity_violations(model, grid), 1001, cfg.seed)
    dist = manifold_distance_swiss(swiss_roll_embed(generated))
    report.add("ood_fraction", float((dist > MANIFOLD_DISTANCE_THRESHOLD).mean()), cfg.n_generate, cfg.seed)
    report.add("manifold_distance_p99", float(np.quantile(dist, 0.99)), cfg.n_generate, cfg.seed)
    return report


def _uniform_metrics(cfg, generated, r_eval) -> MetricsReport:
    report = MetricsReport()
    inside = UNIT_SQUARE.contains(generated, margin=INSIDE_MARGIN)
    report.add("inside_fraction", float(inside.mean()), cfg.n_generate, cfg.seed)
    stat, dof, oob = grid_chi_square(generated, GridSpec(10, [0.0, 0.0], [1.0, 1.0]))
    report.add("chi_square", stat, cfg.n_generate, cfg.seed)
    report.add("chi_square_dof", dof, cfg.n_generate, cfg.seed)
    report.add("out_of_box_fraction", oob, cfg.n_generate, cfg.seed)
    fresh = sample_uniform_box(r_eval, cfg.n_generate, UNIT_SQUARE)
    report.add("energy_distance", energy_distance(generated, fresh, seed=cfg.seed), cfg.n_generate, cfg.seed)
    held_out = sample_uniform_box(r_eval, 1000, UNIT_SQUARE)
    report.add("coverage", coverage_score(generated, held_out, COVERAGE_RADIUS), 1000, cfg.seed)
    return report


def _disjoint_metrics(cfg, generated, spec: DisjointUniformSpec, train_props) -> MetricsReport:
    report = MetricsReport()
    member = np.stack([box.contains(generated, margin=INSIDE_MARGIN) for box in spec.boxes])
    inside_union = member.any(axis=0)
    report.add("inside_union_fraction", float(inside_union.mean()), cfg.n_generate, cfg.seed)
    n_inside = max(int(inside_union.sum()), 1)
    for i in range(len(spec.boxes)):
        report.add(f"prop_box_{i}", float(member[i].sum() / n_inside), cfg.n_generate, cfg.seed)
        report.add(f"train_prop_box_{i}", float(train_props[i]), cfg.n_train, cfg.seed)
    return report


def _custom_metrics(cfg, generated, data) -> MetricsReport:
    report = MetricsReport()
    report.add("energy_distance", energy_distance(generated, data, seed=cfg.seed), cfg.n_generate, cfg.seed)
    return report


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    if cfg.experiment == "custom" and not cfg.data_path:
        raise ValueError("run_experiment: custom experiments require data_path")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    # Stream order is part of the reproducibility contract; do not reorder.
    r_data, r_source, r_val_data, r_val_source, r_cluster, r_init, r_train, r_gen, r_eval = spawn_rngs(
        cfg.seed, 9
    )
    phases = _Phases()
    spec_mix = disjoint_boxes_spec() if cfg.experiment == "disjoint_uniform" else None
    train_props = None
    shift = None
    scale = None
    source = None
    val_pairs = None

    if cfg.experiment == "swiss1d":
        data = phases.run("data", lambda: sample_swiss_roll_theta(r_data, cfg.n_train))

        def _label():
            pairs_raw = label_1d(data, sample_standard_normal(r_source, cfg.n_train, 1))
            theta_v = sample_swiss_roll_theta(r_val_data, cfg.n_val)
            val_raw = label_1d(theta_v, sample_standard_normal(r_val_source, cfg.n_val, 1))
            return pairs_raw, val_raw

        pairs_raw, val_raw = phases.run("label", _label)
        shift = pairs_raw.targets.mean(axis=0)
        train_pairs = LabeledDataset(pairs_raw.sources, pairs_raw.targets - shift)
        val_pairs = LabeledDataset(val_raw.sources, val_raw.targets - shift)
        mlp_cfg = cfg.mlp

    elif cfg.experiment == "uniform2d":
        data = phases.run("data", lambda: sample_uniform_box(r_data, cfg.n_train, UNIT_SQUARE))

        def _label():
            pairs, mean, scl = label_against_normal(data, r_source, rescale=cfg.rescale)
            # Validation pairs come from a separately generated pool labeled
            # at the same size as the training set, then subsampled: pair
            # noise scales with the labeled-pool size, and a small noisy
            # pool would drown the val signal that drives early stopping.
            pool_n = max(cfg.n_val, cfg.n_train)
            data_v = sample_uniform_box(r_val_data, pool_n, UNIT_SQUARE)
            centered_v = (data_v - mean) / scl if scl is not None else data_v - mean
            pool = label_greedy_cosine(
                centered_v, sample_standard_normal(r_val_source, pool_n, 2), check_centered=False
            )
            keep = r_val_source.choice(pool_n, size=cfg.n_val, replace=False)
            val = LabeledDataset(pool.sources[keep], pool.targets[keep])
            return pairs, mean, scl, val

        train_pairs, shift, scale, val_pairs = phases.run("label", _label)
        pairs_raw = _uncentered_pairs(train_pairs, shift, scale)
        mlp_cfg = cfg.mlp

    elif cfg.experiment == "disjoint_uniform":
        def _data():
            pts, box_labels = sample_disjoint_uniform(r_data, cfg.n_train, spec_mix)
            return pts, np.bincount(box_labels, minlength=len(spec_mix.boxes)) / cfg.n_train

        (data, train_props) = phases.run("data", _data)

        def _label():
            cm = fit_clusters(r_cluster, data, k=cfg.clusters or 2)
            pairs, cm = label_clustered(r_source, data, cm)
            # Same pool trick as uniform2d: validation pairs subsampled from
            # a full-size separately labeled pool to keep their noise low.
            pool_n = max(cfg.n_val, cfg.n_train)
            data_v, _ = sample_disjoint_uniform(r_val_data, pool_n, spec_mix)
            pool, _ = label_clustered(r_val_source, data_v, cm)
            keep = r_val_source.choice(pool_n, size=cfg.n_val, replace=False)
            val = LabeledDataset(pool.sources[keep], pool.targets[keep])
            return pairs, cm, val

        train_pairs, cluster_model, val_pairs = phases.run("label", _label)
        pairs_raw = train_pairs
        source = MixtureSource(cluster_model.centers, cluster_model.stds, cluster_model.weights)
        mlp_cfg = cfg.mlp

    elif cfg.experiment == "custom":
        data = phases.run("data", lambda: csvio.read_points_csv(cfg.data_path))
        d = data.shape[1]
        cfg.n_train = data.shape[0]
        mlp_cfg = MlpConfig(
            d, d, cfg.mlp.hidden_layers, cfg.mlp.width, cfg.mlp.leaky_slope, cfg.mlp.batch_norm, cfg.mlp.seed
        )
        cfg.mlp = mlp_cfg

        def _label():
            if cfg.clusters:
                cm = fit_clusters(r_cluster, data, k=cfg.clusters)
                return label_clustered(r_source, data, cm)
            pairs, mean, scl = label_against_normal(data, r_source, rescale=cfg.rescale)
            return pairs, (mean, scl)

        labeled, extra = phases.run("label", _label)
        if cfg.clusters:
            train_pairs = labeled
            pairs_raw = labeled
            source = MixtureSource(extra.centers, extra.stds, extra.weights)
        else:
            train_pairs = labeled
            shift, scale = extra
            pairs_raw = _uncentered_pairs(labeled, shift, scale)

    else:  # unreachable; ExperimentConfig validates
        raise ValueError(cfg.experiment)

    def _train():
        model = init_model(mlp_cfg, r_init)
        model.output_shift = shift
        model.output_scale = scale
        model.source = source
        return train(model, train_pairs, cfg.train, r_train, val=val_pairs)

    model, history = phases.run("train", _train)

    def _sample():
        ys = sample_source(model, r_gen, cfg.n_generate)
        return ys, predict(model, ys)

    ys, generated = phases.run("sample", _sample)

    def _eval():
        if cfg.experiment == "swiss1d":
            return _swiss_metrics(cfg, model, generated, r_eval)
        if cfg.experiment == "uniform2d":
            return _uniform_metrics(cfg, generated, r_eval)
        if cfg.experiment == "disjoint_uniform":
            return _disjoint_metrics(cfg, generated, spec_mix, train_props)
        return _custom_metrics(cfg, generated, data)

    report = phases.run("eval", _eval)

    outputs = {
        "samples_csv": str(out_dir / "samples.csv"),
        "pairs_csv": str(out_dir / "pairs.csv"),
        "model_bin": str(out_dir / "model.bin"),
        "metrics_json": str(out_dir / "metrics.json"),
        "manifest_json": str(out_dir / "manifest.json"),
    }
    csvio.write_points_csv(outputs["samples_csv"], generated)
    csvio.write_pairs_csv(outputs["pairs_csv"], pairs_raw)
    save_model(model, outputs["model_bin"])
    Path(outputs["metrics_json"]).write_text(report.to_json())

    def _plot():
        path = out_dir / f"plot.{cfg.plot_format}"
        color = np.linalg.norm(ys, axis=1)
        if generated.shape[1] == 1:
            plots.scatter_swiss(generated, path, color=color)
        elif generated.shape[1] == 2:
            plots.scatter_2d(generated, path, color=color)
        else:
            return None
        return str(path)

    plot_path = phases.run("plot", _plot)
    if plot_path:
        outputs["plot"] = plot_path

    manifest = RunManifest(
        experiment=cfg.experiment,
        version=__version__,
        config=cfg.to_dict(),
        timings_s=phases.timings,
        outputs=outputs,
        metrics=report.entries,
        history=history,
    )
    Path(outputs["manifest_json"]).write_text(manifest.to_json())
    return manifest


def _uncentered_pairs(labeled: LabeledDataset, mean, scale) -> LabeledDataset:
    """Pairs with targets mapped back to original data coordinates for the CSV."""
    targets = labeled.targets * scale + mean if scale is not None else labeled.targets + mean
    return LabeledDataset(sources=labeled.sources, targets=targets, clusters=labeled.clusters)
