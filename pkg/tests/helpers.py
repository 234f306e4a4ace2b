"""Shared test oracles: a straight-line transcription of the greedy matching
procedure, its deliberately unsorted variant, and a finite-difference
gradient checker."""

import numpy as np

from gtnlab import net


def _cos(a, b, resolution):
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        return 0.0  # directionless rows score 0 against everything
    s = min(1.0, max(-1.0, float(np.dot(a, b) / (na * nb))))
    if resolution is not None:
        s = np.rint(s / resolution)
    return s


def _greedy_scan(xs, ys, resolution):
    remaining = list(range(len(xs)))
    sources, targets = [], []
    for yi in ys:
        best_pos = 0
        best = -np.inf
        for pos, j in enumerate(remaining):
            s = _cos(xs[j], yi, resolution)
            if s > best:
                best = s
                best_pos = pos
        j = remaining.pop(best_pos)
        sources.append(yi)
        targets.append(xs[j])
    return np.asarray(sources), np.asarray(targets)


def greedy_reference(d_x, d_y, resolution=None):
    """Literal transcription: sort both ascending by norm (stable), take each
    source in order, give it the remaining target with the highest cosine
    score (first maximum wins), remove that target. ``resolution`` selects
    the same score grid the production kernels use; None compares exact
    float64 values."""
    x = np.asarray(d_x, dtype=np.float64)
    y = np.asarray(d_y, dtype=np.float64)
    xs = x[np.argsort(np.linalg.norm(x, axis=1), kind="stable")]
    ys = y[np.argsort(np.linalg.norm(y, axis=1), kind="stable")]
    return _greedy_scan(xs, ys, resolution)


def greedy_unsorted(d_x, d_y, resolution=None):
    """Same scan but without the norm sort: inputs are consumed as given."""
    x = np.asarray(d_x, dtype=np.float64)
    y = np.asarray(d_y, dtype=np.float64)
    return _greedy_scan(x, y, resolution)


def mean_pair_distance(sources, targets):
    return float(np.linalg.norm(np.asarray(sources) - np.asarray(targets), axis=1).mean())


def train_mode_loss(model, x, t):
    out, _ = net._run_forward(model, x, train=True, update_running=False)
    diff = out - t
    return float((diff * diff).sum() / x.shape[0])


def fd_gradient_max_rel_err(model, x, t, step=1e-5):
    """Largest relative disagreement between analytic gradients and central
    finite differences over every trainable parameter.

    Relative error uses max(|analytic|, |fd|, 1e-6) in the denominator so
    exactly-zero gradients do not divide by zero.
    """
    grads = net.backward(model, x, t)
    analytic = net.gradient_arrays(grads)
    worst = 0.0
    for p, g in zip(net.parameter_arrays(model), analytic):
        flat_p = p.ravel()
        flat_g = g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + step
            up = train_mode_loss(model, x, t)
            flat_p[i] = orig - step
            down = train_mode_loss(model, x, t)
            flat_p[i] = orig
            fd = (up - down) / (2.0 * step)
            rel = abs(fd - flat_g[i]) / max(abs(fd), abs(flat_g[i]), 1e-6)
            worst = max(worst, rel)
    return worst


def random_small_model(rng, batch_norm=None):
    """Random small architecture plus a matching batch, for gradient checks."""
    cfg = net.MlpConfig(
        input_dim=int(rng.integers(1, 5)),
        output_dim=int(rng.integers(1, 5)),
        hidden_layers=int(rng.integers(1, 4)),
        width=int(rng.integers(2, 9)),
        leaky_slope=float(rng.choice([0.0, 0.25, 0.5, 1.0])),
        batch_norm=bool(rng.integers(0, 2)) if batch_norm is None else batch_norm,
    )
    model = net.init_model(cfg, rng)
    x = rng.standard_normal((8, cfg.input_dim))
    t = rng.standard_normal((8, cfg.output_dim))
    return model, x, t
