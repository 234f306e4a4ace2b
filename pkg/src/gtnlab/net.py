"""Feedforward regression network built from scratch.

Hidden layers are affine -> LeakyReLU -> optional batch norm; the output is
a plain affine map. Gradients come from manual backpropagation, optimization
from Adam, and training stops on a validation set with patience. Trained
models round-trip through a small self-describing binary file.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import LabeledDataset, as_points

BN_EPS = 1e-5
BN_MOMENTUM = 0.9  # running = momentum * running + (1 - momentum) * batch

_MAGIC = b"GTNMODEL"
_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file is malformed, truncated, or inconsistent."""


@dataclass
class MlpConfig:
    input_dim: int
    output_dim: int
    hidden_layers: int
    width: int
    leaky_slope: float = 0.5
    batch_norm: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("MlpConfig: input_dim and output_dim must be >= 1")
        if self.hidden_layers < 1 or self.width < 1:
            raise ValueError("MlpConfig: hidden_layers and width must be >= 1")
        if not 0.0 <= self.leaky_slope <= 1.0:
            raise ValueError("MlpConfig: leaky_slope must lie in [0, 1]")

    def layer_dims(self) -> list:
        return [self.input_dim] + [self.width] * self.hidden_layers + [self.output_dim]


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 250
    max_epochs: int = 500
    patience: int = 20
    val_fraction: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    # Plateau decay: after this many epochs without a validation improvement
    # the best weights are restored and the rate is multiplied by
    # plateau_decay (floored at min_lr). 0 disables it. Noisy labels leave
    # Adam jittering at a constant-rate equilibrium well above the model's
    # attainable error, so converging on them needs the rate to anneal.
    plateau_patience: int = 0
    plateau_decay: float = 0.5
    min_lr: float = 1e-5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("TrainConfig: learning_rate must be > 0")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("TrainConfig: val_fraction must lie in (0, 1)")
        if self.patience < 1:
            raise ValueError("TrainConfig: patience must be >= 1")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("TrainConfig: batch_size and max_epochs must be >= 1")
        if self.plateau_patience < 0 or not 0.0 < self.plateau_decay < 1.0 or self.min_lr <= 0:
            raise ValueError("TrainConfig: invalid plateau-decay settings")


@dataclass
class MixtureSource:
    """Gaussian mixture the generator samples from instead of N(0, I)."""

    centers: np.ndarray
    stds: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.centers = as_points(self.centers, "centers", min_rows=1)
        self.stds = as_points(self.stds, "stds", min_rows=1)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.stds.shape != self.centers.shape or self.weights.shape != (self.centers.shape[0],):
            raise ValueError("MixtureSource: centers, stds and weights are inconsistent")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("MixtureSource: weights must be positive and sum to 1")


class MlpModel:
    """Weights, biases, batch-norm state, and generation bookkeeping."""

    def __init__(self, config: MlpConfig):
        self.config = config
        self.weights: list = []
        self.biases: list = []
        self.bn_gamma: list = []
        self.bn_beta: list = []
        self.bn_mean: list = []
        self.bn_var: list = []
        self.output_shift = None  # added back after the final affine at prediction time
        self.output_scale = None  # multiplied back before the shift
        self.source: MixtureSource | None = None
        self.train_mode = False


@dataclass
class Gradients:
    weights: list
    biases: list
    bn_gamma: list = field(default_factory=list)
    bn_beta: list = field(default_factory=list)
    loss: float = 0.0


def init_model(config: MlpConfig, rng) -> MlpModel:
    """Fan-in-scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero
    biases; batch-norm scale 1, shift 0, running stats (0, 1)."""
    model = MlpModel(config)
    dims = config.layer_dims()
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        model.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        model.biases.append(np.zeros(fan_out))
    if config.batch_norm:
        for _ in range(config.hidden_layers):
            model.bn_gamma.append(np.ones(config.width))
            model.bn_beta.append(np.zeros(config.width))
            model.bn_mean.append(np.zeros(config.width))
            model.bn_var.append(np.ones(config.width))
    return model


def parameter_count(model: MlpModel) -> int:
    return sum(int(a.size) for a in parameter_arrays(model))


def parameter_arrays(model: MlpModel) -> list:
    """Trainable arrays in a fixed order (matched by gradient_arrays)."""
    return list(model.weights) + list(model.biases) + list(model.bn_gamma) + list(model.bn_beta)


def gradient_arrays(grads: Gradients) -> list:
    return list(grads.weights) + list(grads.biases) + list(grads.bn_gamma) + list(grads.bn_beta)


def _leaky(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z >= 0.0, z, slope * z)


def _run_forward(model: MlpModel, x: np.ndarray, train: bool, update_running: bool):
    """Forward pass; returns (output, cache) with everything backward needs."""
    cfg = model.config
    cache = {"inputs": [], "z": [], "bn": []}
    h = x
    for layer in range(cfg.hidden_layers):
        cache["inputs"].append(h)
        z = h @ model.weights[layer] + model.biases[layer]
        cache["z"].append(z)
        a = _leaky(z, cfg.leaky_slope)
        if cfg.batch_norm:
            if train:
                mu = a.mean(axis=0)
                var = a.var(axis=0)
                if update_running:
                    model.bn_mean[layer] = BN_MOMENTUM * model.bn_mean[layer] + (1 - BN_MOMENTUM) * mu
                    model.bn_var[layer] = BN_MOMENTUM * model.bn_var[layer] + (1 - BN_MOMENTUM) * var
            else:
                mu = model.bn_mean[layer]
                var = model.bn_var[layer]
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (a - mu) * inv_std
            h = model.bn_gamma[layer] * xhat + model.bn_beta[layer]
            cache["bn"].append((xhat, inv_std))
        else:
            h = a
            cache["bn"].append(None)
    cache["inputs"].append(h)
    out = h @ model.weights[-1] + model.biases[-1]
    return out, cache


def forward(model: MlpModel, batch) -> np.ndarray:
    """Apply the network to a batch of rows.

    In train mode batch norm uses batch statistics and updates the running
    averages; in inference mode it reads the running averages, so the output
    depends only on the weights and the input.
    """
    x = as_points(batch, "batch")
    if x.shape[1] != model.config.input_dim:
        raise ValueError(
            f"forward: batch dimension {x.shape[1]} != model input_dim {model.config.input_dim}"
        )
    if x.shape[0] == 0:
        return np.zeros((0, model.config.output_dim))
    out, _ = _run_forward(model, x, train=model.train_mode, update_running=model.train_mode)
    return out


def mse_loss(pred, target) -> float:
    """(1/n) sum_i |pred_i - target_i|^2."""
    p = as_points(pred, "pred", min_rows=1)
    t = as_points(target, "target", min_rows=1)
    if p.shape != t.shape:
        raise ValueError(f"mse_loss: shape mismatch {p.shape} vs {t.shape}")
    diff = p - t
    return float((diff * diff).sum() / p.shape[0])


def backward(model: MlpModel, batch, target) -> Gradients:
    """Exact gradients of mse_loss w.r.t. every trainable parameter.

    Runs a train-mode forward internally (batch statistics for batch norm,
    running averages updated once). The batch loss rides along on the result.
    """
    cfg = model.config
    x = as_points(batch, "batch", min_rows=1)
    t = as_points(target, "target", min_rows=1)
    if x.shape[1] != cfg.input_dim or t.shape[1] != cfg.output_dim or x.shape[0] != t.shape[0]:
        raise ValueError("backward: batch/target shapes inconsistent with the model")

    out, cache = _run_forward(model, x, train=True, update_running=True)
    n = x.shape[0]
    diff = out - t
    loss = float((diff * diff).sum() / n)

    grads = Gradients(
        weights=[None] * len(model.weights),
        biases=[None] * len(model.biases),
        bn_gamma=[None] * len(model.bn_gamma),
        bn_beta=[None] * len(model.bn_beta),
        loss=loss,
    )

    d_out = 2.0 * diff / n
    grads.weights[-1] = cache["inputs"][-1].T @ d_out
    grads.biases[-1] = d_out.sum(axis=0)
    d_h = d_out @ model.weights[-1].T

    for layer in range(cfg.hidden_layers - 1, -1, -1):
        if cfg.batch_norm:
            xhat, inv_std = cache["bn"][layer]
            grads.bn_gamma[layer] = (d_h * xhat).sum(axis=0)
            grads.bn_beta[layer] = d_h.sum(axis=0)
            d_xhat = d_h * model.bn_gamma[layer]
            b = xhat.shape[0]
            d_a = (inv_std / b) * (
                b * d_xhat - d_xhat.sum(axis=0) - xhat * (d_xhat * xhat).sum(axis=0)
            )
        else:
            d_a = d_h
        z = cache["z"][layer]
        d_z = d_a * np.where(z >= 0.0, 1.0, cfg.leaky_slope)
        grads.weights[layer] = cache["inputs"][layer].T @ d_z
        grads.biases[layer] = d_z.sum(axis=0)
        if layer > 0:
            d_h = d_z @ model.weights[layer].T
    return grads


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def init_like(cls, params) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState, tcfg: TrainConfig, lr: float | None = None):
    lr = tcfg.learning_rate if lr is None else lr
    state.t += 1
    bc1 = 1.0 - tcfg.beta1 ** state.t
    bc2 = 1.0 - tcfg.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= tcfg.beta1
        m += (1.0 - tcfg.beta1) * g
        v *= tcfg.beta2
        v += (1.0 - tcfg.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + tcfg.adam_epsilon)


def _snapshot(model: MlpModel) -> list:
    return [a.copy() for a in parameter_arrays(model) + model.bn_mean + model.bn_var]


def _restore(model: MlpModel, snap: list):
    for dst, src in zip(parameter_arrays(model) + model.bn_mean + model.bn_var, snap):
        np.copyto(dst, src)


def _validation_mse(model: MlpModel, sources: np.ndarray, targets: np.ndarray) -> float:
    out, _ = _run_forward(model, sources, train=False, update_running=False)
    diff = out - targets
    return float((diff * diff).sum() / sources.shape[0])


def train(model: MlpModel, labeled: LabeledDataset, tcfg: TrainConfig, rng, val: LabeledDataset | None = None):
    """Mini-batch Adam with validation-based early stopping.

    When ``val`` is None a val_fraction split of the pairs is held out by a
    seeded shuffle; otherwise all pairs train and ``val`` is used as-is.
    The best-validation weights are restored before returning. History is a
    dict with per-epoch train/val MSE, best epoch, and stop reason.
    """
    if labeled.d != model.config.input_dim or labeled.targets.shape[1] != model.config.output_dim:
        raise ValueError("train: labeled data dimensions do not match the model")

    if val is None:
        perm = rng.permutation(labeled.n)
        n_val = max(1, int(round(tcfg.val_fraction * labeled.n)))
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        train_s, train_t = labeled.sources[train_idx], labeled.targets[train_idx]
        val_s, val_t = labeled.sources[val_idx], labeled.targets[val_idx]
    else:
        train_s, train_t = labeled.sources, labeled.targets
        val_s, val_t = val.sources, val.targets

    n_train = train_s.shape[0]
    if n_train < 2 * tcfg.batch_size:
        raise ValueError(
            f"train: {n_train} training rows give fewer than 2 mini-batches of size {tcfg.batch_size}"
        )

    model.train_mode = True
    adam = AdamState.init_like(parameter_arrays(model))
    lr = tcfg.learning_rate
    best_val = np.inf
    best_snap = _snapshot(model)
    best_epoch = 0
    bad_epochs = 0
    since_decay = 0
    epochs = []
    stopped_early = False

    for epoch in range(1, tcfg.max_epochs + 1):
        order = rng.permutation(n_train)
        loss_sum = 0.0
        rows = 0
        for start in range(0, n_train, tcfg.batch_size):
            idx = order[start : start + tcfg.batch_size]
            if idx.size < tcfg.batch_size and model.config.batch_norm:
                break  # incomplete tail batch dropped when batch norm is on
            grads = backward(model, train_s[idx], train_t[idx])
            adam_step(parameter_arrays(model), gradient_arrays(grads), adam, tcfg, lr=lr)
            loss_sum += grads.loss * idx.size
            rows += idx.size
        val_mse = _validation_mse(model, val_s, val_t)
        epochs.append({"epoch": epoch, "train_mse": loss_sum / max(rows, 1), "val_mse": val_mse, "lr": lr})
        if val_mse < best_val:
            best_val = val_mse
            best_snap = _snapshot(model)
            best_epoch = epoch
            bad_epochs = 0
            since_decay = 0
        else:
            bad_epochs += 1
            since_decay += 1
            if bad_epochs >= tcfg.patience:
                stopped_early = True
                break
            if tcfg.plateau_patience and since_decay >= tcfg.plateau_patience and lr > tcfg.min_lr:
                lr = max(lr * tcfg.plateau_decay, tcfg.min_lr)
                _restore(model, best_snap)  # anneal from the best point seen
                since_decay = 0

    _restore(model, best_snap)
    model.train_mode = False
    history = {
        "epochs": epochs,
        "best_epoch": best_epoch,
        "best_val_mse": best_val,
        "stopped_early": stopped_early,
        "final_lr": lr,
    }
    return model, history


def predict(model: MlpModel, batch) -> np.ndarray:
    """Inference-mode application including the recorded output scale/shift."""
    x = as_points(batch, "batch")
    if x.shape[1] != model.config.input_dim:
        raise ValueError(
            f"predict: batch dimension {x.shape[1]} != model input_dim {model.config.input_dim}"
        )
    if x.shape[0] == 0:
        out = np.zeros((0, model.config.output_dim))
    else:
        out, _ = _run_forward(model, x, train=False, update_running=False)
    if model.output_scale is not None:
        out = out * model.output_scale
    if model.output_shift is not None:
        out = out + model.output_shift
    return out


def sample_source(model: MlpModel, rng, n: int) -> np.ndarray:
    """Draw n source vectors: standard normal, or the recorded Gaussian mixture."""
    d = model.config.input_dim
    if n == 0:
        return np.zeros((0, d))
    if model.source is None:
        return rng.standard_normal((n, d))
    src = model.source
    idx = rng.choice(src.centers.shape[0], size=n, p=src.weights)
    return src.centers[idx] + rng.standard_normal((n, d)) * src.stds[idx]


def generate(model: MlpModel, rng, n: int) -> np.ndarray:
    """Draw n source vectors and map them through the trained network."""
    if n < 0:
        raise ValueError(f"generate: need n >= 0, got {n}")
    return predict(model, sample_source(model, rng, n))


def _header_dict(model: MlpModel) -> dict:
    tensors = []
    for i, w in enumerate(model.weights):
        tensors.append({"name": f"weight_{i}", "shape": list(w.shape)})
    for i, b in enumerate(model.biases):
        tensors.append({"name": f"bias_{i}", "shape": list(b.shape)})
    for kind, group in (
        ("bn_gamma", model.bn_gamma),
        ("bn_beta", model.bn_beta),
        ("bn_mean", model.bn_mean),
        ("bn_var", model.bn_var),
    ):
        for i, a in enumerate(group):
            tensors.append({"name": f"{kind}_{i}", "shape": list(a.shape)})
    source = None
    if model.source is not None:
        source = {
            "kind": "gaussian_mixture",
            "centers": model.source.centers.tolist(),
            "stds": model.source.stds.tolist(),
            "weights": model.source.weights.tolist(),
        }
    return {
        "config": asdict(model.config),
        "output_shift": None if model.output_shift is None else np.asarray(model.output_shift).tolist(),
        "output_scale": None if model.output_scale is None else np.asarray(model.output_scale).tolist(),
        "source": source,
        "tensors": tensors,
    }


def _tensor_groups(model: MlpModel) -> list:
    return (
        list(model.weights)
        + list(model.biases)
        + list(model.bn_gamma)
        + list(model.bn_beta)
        + list(model.bn_mean)
        + list(model.bn_var)
    )


def save_model(model: MlpModel, path):
    """Write the container: magic, version, JSON header, then raw float64
    little-endian tensors in the header's declared order."""
    header = json.dumps(_header_dict(model), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _FORMAT_VERSION))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for arr in _tensor_groups(model):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _expected_tensor_shapes(config: MlpConfig) -> list:
    dims = config.layer_dims()
    expected = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        expected.append((f"weight_{i}", (fan_in, fan_out)))
    for i, (_, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        expected.append((f"bias_{i}", (fan_out,)))
    if config.batch_norm:
        for kind in ("bn_gamma", "bn_beta", "bn_mean", "bn_var"):
            for i in range(config.hidden_layers):
                expected.append((f"{kind}_{i}", (config.width,)))
    return expected


def load_model(path) -> MlpModel:
    """Read and validate a model container; inverse of save_model."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 8:
        raise ModelFormatError(f"{path}: truncated model file")
    if blob[: len(_MAGIC)] != _MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    version, header_len = struct.unpack_from("<II", blob, len(_MAGIC))
    if version != _FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format version {version} (expected {_FORMAT_VERSION})")
    body_start = len(_MAGIC) + 8
    if body_start + header_len > len(blob):
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[body_start : body_start + header_len].decode("utf-8"))
        config = MlpConfig(**header["config"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ModelFormatError(f"{path}: corrupt model header ({exc})") from exc

    declared = [(t["name"], tuple(t["shape"])) for t in header["tensors"]]
    if declared != _expected_tensor_shapes(config):
        raise ModelFormatError(f"{path}: tensor list does not match the declared architecture")

    payload = blob[body_start + header_len :]
    total = sum(int(np.prod(shape)) for _, shape in declared)
    if len(payload) != total * 8:
        raise ModelFormatError(
            f"{path}: payload holds {len(payload)} bytes, expected {total * 8} (truncated or trailing data)"
        )

    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if not np.isfinite(flat).all():
        raise ModelFormatError(f"{path}: non-finite parameter values")
    model = MlpModel(config)
    offset = 0
    arrays = {}
    for name, shape in declared:
        size = int(np.prod(shape))
        arrays[name] = flat[offset : offset + size].reshape(shape).copy()
        offset += size
    n_layers = config.hidden_layers + 1
    model.weights = [arrays[f"weight_{i}"] for i in range(n_layers)]
    model.biases = [arrays[f"bias_{i}"] for i in range(n_layers)]
    if config.batch_norm:
        model.bn_gamma = [arrays[f"bn_gamma_{i}"] for i in range(config.hidden_layers)]
        model.bn_beta = [arrays[f"bn_beta_{i}"] for i in range(config.hidden_layers)]
        model.bn_mean = [arrays[f"bn_mean_{i}"] for i in range(config.hidden_layers)]
        model.bn_var = [arrays[f"bn_var_{i}"] for i in range(config.hidden_layers)]
    if header.get("output_shift") is not None:
        model.output_shift = np.asarray(header["output_shift"], dtype=np.float64)
    if header.get("output_scale") is not None:
        model.output_scale = np.asarray(header["output_scale"], dtype=np.float64)
    if header.get("source") is not None:
        src = header["source"]
        if src.get("kind") != "gaussian_mixture":
            raise ModelFormatError(f"{path}: unknown source kind {src.get('kind')!r}")
        model.source = MixtureSource(
            centers=np.asarray(src["centers"]), stds=np.asarray(src["stds"]), weights=np.asarray(src["weights"])
        )
    return model
