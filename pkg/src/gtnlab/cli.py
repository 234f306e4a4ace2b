"""Command-line entry point.

Subcommands: run, label, train, sample, eval, plot. Heavy imports happen
inside the handlers so GTN_LAB_THREADS can cap BLAS pools before numpy
loads. Every handled error prints one line `E_CODE: message` to stderr and
exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _apply_thread_cap():
    cap = os.environ.get("GTN_LAB_THREADS")
    if not cap:
        return
    if not cap.isdigit() or int(cap) < 1:
        raise CliError("E_CONFIG", f"GTN_LAB_THREADS must be a positive integer, got {cap!r}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtnlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a full experiment pipeline")
    run.add_argument("--experiment", required=True, choices=("swiss1d", "uniform2d", "disjoint_uniform", "custom"))
    run.add_argument("--out-dir", required=True)
    run.add_argument("--config", help="JSON config file; explicit flags win over it")
    run.add_argument("--n-train", type=int)
    run.add_argument("--n-val", type=int)
    run.add_argument("--n-generate", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--layers", type=int, help="hidden layer count")
    run.add_argument("--width", type=int)
    run.add_argument("--lr", type=float)
    run.add_argument("--batch-size", type=int)
    run.add_argument("--patience", type=int)
    run.add_argument("--max-epochs", type=int)
    run.add_argument("--clusters", type=int)
    run.add_argument("--data", help="input CSV for custom experiments")
    run.add_argument("--format", choices=("png", "svg"))
    run.add_argument("--rescale", action=argparse.BooleanOptionalAction, default=None)
    run.set_defaults(func=cmd_run)

    label = sub.add_parser("label", help="draw a normal source and write training pairs")
    label.add_argument("--data", required=True)
    label.add_argument("--out", required=True)
    label.add_argument("--seed", type=int, default=7)
    label.add_argument("--clusters", type=int)
    label.add_argument("--rescale", action="store_true")
    label.set_defaults(func=cmd_label)

    tr = sub.add_parser("train", help="train a model from a pairs CSV")
    tr.add_argument("--pairs", required=True)
    tr.add_argument("--out", required=True)
    tr.add_argument("--layers", type=int, default=6)
    tr.add_argument("--width", type=int, default=6)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--batch-size", type=int, default=250)
    tr.add_argument("--patience", type=int, default=20)
    tr.add_argument("--max-epochs", type=int, default=300)
    tr.add_argument("--val-fraction", type=float, default=0.1)
    tr.add_argument("--seed", type=int, default=7)
    tr.set_defaults(func=cmd_train)

    sample = sub.add_parser("sample", help="draw generated samples from a saved model")
    sample.add_argument("--model", required=True)
    sample.add_argument("--n", type=int, required=True)
    sample.add_argument("--seed", type=int, default=7)
    sample.add_argument("--out", required=True)
    sample.set_defaults(func=cmd_sample)

    ev = sub.add_parser("eval", help="compute the metric battery for generated samples")
    ev.add_argument("--generated", required=True)
    ev.add_argument("--reference", help="reference CSV for generic comparisons")
    ev.add_argument("--preset", choices=("swiss1d", "uniform2d", "disjoint_uniform"))
    ev.add_argument("--model", help="model file (needed by the swiss1d battery)")
    ev.add_argument("--seed", type=int, default=7)
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_eval)

    plot = sub.add_parser("plot", help="write a static scatter image")
    plot.add_argument("--samples", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--style", choices=("auto", "swiss", "pairs"), default="auto")
    plot.add_argument("--dims", help="two comma-separated coordinates to plot, e.g. 0,1")
    plot.set_defaults(func=cmd_plot)

    return parser


def cmd_run(args) -> int:
    from .experiments import ExperimentConfig, preset_config, run_experiment

    cfg = preset_config(args.experiment, args.out_dir, seed=7)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **json.load(fh)})
        except json.JSONDecodeError as exc:
            raise CliError("E_CONFIG", f"config file {args.config}: {exc}") from exc
        cfg.out_dir = args.out_dir
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.mlp.seed = args.seed
    for attr, value in (("n_train", args.n_train), ("n_val", args.n_val), ("n_generate", args.n_generate)):
        if value is not None:
            setattr(cfg, attr, value)
    if args.layers is not None:
        cfg.mlp.hidden_layers = args.layers
    if args.width is not None:
        cfg.mlp.width = args.width
    if args.lr is not None:
        cfg.train.learning_rate = args.lr
    if args.batch_size is not None:
        cfg.train.batch_size = args.batch_size
    if args.patience is not None:
        cfg.train.patience = args.patience
    if args.max_epochs is not None:
        cfg.train.max_epochs = args.max_epochs
    if args.clusters is not None:
        cfg.clusters = args.clusters
    if args.data is not None:
        cfg.data_path = args.data
    if args.format is not None:
        cfg.plot_format = args.format
    if args.rescale is not None:
        cfg.rescale = args.rescale
    if cfg.experiment == "custom" and not cfg.data_path:
        raise CliError("E_CONFIG", "custom experiments require --data pointing at a CSV of row vectors")
    # Re-validate after overrides.
    cfg = ExperimentConfig.from_dict(cfg.to_dict())

    manifest = run_experiment(cfg)
    for name, entry in sorted(manifest.metrics.items()):
        print(f"{name} = {entry['value']:.6g}")
    print(f"manifest: {manifest.outputs['manifest_json']}")
    return 0


def cmd_label(args) -> int:
    from . import csvio
    from .core import make_rng
    from .labeling import fit_clusters, label_against_normal, label_clustered

    data = csvio.read_points_csv(args.data)
    rng = make_rng(args.seed)
    if args.clusters:
        cm = fit_clusters(rng, data, k=args.clusters)
        labeled, _ = label_clustered(rng, data, cm)
    else:
        labeled, mean, scale = label_against_normal(data, rng, rescale=args.rescale)
        targets = labeled.targets * scale + mean if scale is not None else labeled.targets + mean
        labeled = type(labeled)(sources=labeled.sources, targets=targets)
    csvio.write_pairs_csv(args.out, labeled)
    print(f"{labeled.n} pairs -> {args.out}")
    return 0


def cmd_train(args) -> int:
    from . import csvio
    from .core import spawn_rngs
    from .net import MlpConfig, TrainConfig, init_model, save_model, train

    labeled = csvio.read_pairs_csv(args.pairs)
    mlp_cfg = MlpConfig(labeled.d, labeled.d, args.layers, args.width, seed=args.seed)
    tcfg = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        val_fraction=args.val_fraction,
    )
    r_init, r_train = spawn_rngs(args.seed, 2)
    model, history = train(init_model(mlp_cfg, r_init), labeled, tcfg, r_train)
    save_model(model, args.out)
    print(f"best_val_mse = {history['best_val_mse']:.6g} (epoch {history['best_epoch']}) -> {args.out}")
    return 0


def cmd_sample(args) -> int:
    from . import csvio
    from .core import make_rng
    from .net import generate, load_model

    if args.n < 0:
        raise CliError("E_CONFIG", f"--n must be >= 0, got {args.n}")
    model = load_model(args.model)
    points = generate(model, make_rng(args.seed), args.n)
    if points.shape[0] == 0:
        points = points.reshape(0, model.config.output_dim)
    csvio.write_points_csv(args.out, points)
    print(f"{args.n} samples -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    from . import csvio
    from .core import MetricsReport, make_rng
    from .experiments import (
        _disjoint_metrics,
        _swiss_metrics,
        _uniform_metrics,
        disjoint_boxes_spec,
    )
    from .metrics import energy_distance, ks_statistic
    from .net import load_model

    generated = csvio.read_points_csv(args.generated)
    if args.preset:
        class _Cfg:  # the metric batteries only read these fields
            n_generate = generated.shape[0]
            n_train = generated.shape[0]
            seed = args.seed

        rng = make_rng(args.seed)
        if args.preset == "swiss1d":
            if not args.model:
                raise CliError("E_CONFIG", "the swiss1d battery needs --model for the monotonicity check")
            report = _swiss_metrics(_Cfg, load_model(args.model), generated, rng)
        elif args.preset == "uniform2d":
            report = _uniform_metrics(_Cfg, generated, rng)
        else:
            spec = disjoint_boxes_spec()
            report = _disjoint_metrics(_Cfg, generated, spec, spec.weights)
    elif args.reference:
        reference = csvio.read_points_csv(args.reference)
        if reference.shape[1] != generated.shape[1]:
            raise CliError(
                "E_DIM",
                f"dimension mismatch: generated d={generated.shape[1]}, reference d={reference.shape[1]}",
            )
        report = MetricsReport()
        report.add(
            "energy_distance",
            energy_distance(generated, reference, seed=args.seed),
            generated.shape[0],
            args.seed,
        )
        if generated.shape[1] == 1:
            report.add("ks", ks_statistic(generated, reference), generated.shape[0], args.seed)
    else:
        raise CliError("E_CONFIG", "custom data needs an explicit --reference CSV (or use --preset)")

    with open(args.out, "w") as fh:
        fh.write(report.to_json())
    print(f"metrics -> {args.out}")
    return 0


def cmd_plot(args) -> int:
    from . import csvio, plots

    if args.style == "pairs":
        labeled = csvio.read_pairs_csv(args.samples)
        dims = _parse_dims(args.dims, labeled.d)
        plots.scatter_pairs(labeled, args.out, dims=dims or (0, 1))
        print(f"plot -> {args.out}")
        return 0

    points = csvio.read_points_csv(args.samples)
    d = points.shape[1]
    if args.style == "swiss":
        if d != 1:
            raise CliError("E_DATA", f"swiss style needs 1-D samples, got d={d}")
        plots.scatter_swiss(points, args.out)
    elif d == 1:
        plots.histogram_1d(points, args.out)
    elif d == 2:
        plots.scatter_2d(points, args.out)
    else:
        dims = _parse_dims(args.dims, d)
        if dims is None:
            raise CliError(
                "E_DATA",
                f"data has d={d} > 2; select two coordinates with --dims i,j",
            )
        plots.scatter_2d(points[:, list(dims)], args.out)
    print(f"plot -> {args.out}")
    return 0


def _parse_dims(spec, d):
    if spec is None:
        return None
    try:
        i, j = (int(part) for part in spec.split(","))
    except ValueError:
        raise CliError("E_CONFIG", f"--dims expects two comma-separated integers, got {spec!r}") from None
    if not (0 <= i < d and 0 <= j < d) or i == j:
        raise CliError("E_CONFIG", f"--dims {spec!r} out of range for d={d}")
    return (i, j)


def _error_code(exc: Exception) -> str:
    from .net import ModelFormatError

    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, ModelFormatError):
        return "E_MODEL"
    if isinstance(exc, OSError):
        return "E_IO"
    if isinstance(exc, (ValueError, TypeError, KeyError)):
        return "E_DATA"
    return "E_INTERNAL"


def main(argv=None) -> int:
    try:
        _apply_thread_cap()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SystemExit:
        raise
    except Exception as exc:  # every handled failure becomes one parsable line
        message = " ".join(str(exc).split())
        print(f"{_error_code(exc)}: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
