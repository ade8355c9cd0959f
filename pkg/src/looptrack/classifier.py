"""Curve-family classification of 2D loops.

Two classifiers are provided:

* a small feed-forward softmax network trained on synthetically generated
  loops (the fast path), consuming a fixed-length feature vector built by
  :func:`preprocess`;
* a residual-based oracle that fits every family with the
  Levenberg-Marquardt fitter and picks the family whose fitted curve
  passes closest to the points (slow, non-learned; used for
  cross-validation and as a fallback when the network is unsure).

Feature vectors are similarity-normalised loops: resampled to a fixed
count, centred, scaled to unit RMS radius and rolled to a canonical start
point.  Rotation is deliberately not normalised away; the training data
covers all orientations instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import curves, fitter, transform2d
from .curves import CanonicalParams, CurveFamily
from .errors import ConfigurationError, InvalidInputError
from .transform2d import CurveModel, Pose2

__all__ = [
    "TrainConfig",
    "NetworkModel",
    "preprocess",
    "generate_dataset",
    "train",
    "classify",
    "classify_points",
    "save_model",
    "load_model",
    "residual_oracle",
    "dataset_to_csv",
    "dataset_from_csv",
]

N_CLASSES = 9
MODEL_FORMAT_VERSION = 1

# mild preference for simpler families when fitted residuals are close;
# keeps the oracle from preferring a limacon over the circle it degenerates to
_COMPLEXITY_PENALTY = 0.05


def _resample_closed(points: np.ndarray, m: int) -> np.ndarray:
    """Resample an ordered loop to exactly m points, uniform in index with wrap."""
    n = len(points)
    pos = np.arange(m, dtype=float) * n / m
    i0 = np.floor(pos).astype(int) % n
    i1 = (i0 + 1) % n
    frac = (pos - np.floor(pos))[:, None]
    return points[i0] * (1.0 - frac) + points[i1] * frac


def preprocess(points, m: int = 64) -> np.ndarray:
    """Turn one ordered loop of 2D points into a normalised feature vector.

    Resamples to m points, removes translation (centroid) and scale (RMS
    radius), and rolls the sequence to start at the point of maximum x
    (ties broken by maximum y).  Output layout is [x_0..x_{m-1}, y_0..y_{m-1}].
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 8:
        raise InvalidInputError(f"need >= 8 loop points with shape (n, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("points contain non-finite coordinates")
    if m < 8:
        raise InvalidInputError(f"resample count must be >= 8, got {m}")
    res = _resample_closed(pts, m)
    res = res - res.mean(axis=0)
    rms = float(np.sqrt(np.mean(np.sum(res**2, axis=1))))
    if rms < 1e-12:
        raise InvalidInputError("loop has zero extent")
    res = res / rms
    start = int(np.lexsort((res[:, 1], res[:, 0]))[-1])  # max x, ties by max y
    res = np.roll(res, -start, axis=0)
    return np.concatenate([res[:, 0], res[:, 1]])


def _uniform_arclength(points: np.ndarray, n: int) -> np.ndarray:
    """Resample a closed polyline to n points uniform in arc length."""
    closed = np.vstack([points, points[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    want = total * np.arange(n) / n
    idx = np.searchsorted(s, want, side="right") - 1
    idx = np.clip(idx, 0, len(seg) - 1)
    frac = ((want - s[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0))[:, None]
    return closed[idx] * (1.0 - frac) + closed[idx + 1] * frac


def generate_dataset(n_per_class: int, noise_std: float, seed: int,
                     m: int = 64, loop_points: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Synthesise a labelled training set of normalised loop features.

    Per family: ``n_per_class`` loops with sizes drawn from [0.5, 5],
    random orientation, offsets in [-10, 10] m and Gaussian noise of
    ``noise_std * a`` per coordinate.  Loops are resampled to constant
    arc length before preprocessing, matching how real trajectories are
    observed (constant target speed).  Deterministic for a fixed seed.
    """
    if n_per_class < 1:
        raise InvalidInputError("n_per_class must be >= 1")
    if noise_std < 0:
        raise InvalidInputError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    xs = np.empty((N_CLASSES * n_per_class, 2 * m))
    ys = np.empty(N_CLASSES * n_per_class, dtype=np.int64)
    row = 0
    for family in CurveFamily:
        for _ in range(n_per_class):
            a = rng.uniform(0.5, 5.0)
            b = rng.uniform(0.5, 5.0) if curves.arity(family) == 2 else None
            pose = Pose2(rng.uniform(0.0, 2.0 * np.pi), rng.uniform(-10, 10), rng.uniform(-10, 10))
            model = CurveModel(family, CanonicalParams(a, b), pose)
            dense = transform2d.sample_model(model, 4 * loop_points)
            loop = _uniform_arclength(dense, loop_points)
            if noise_std > 0:
                loop = loop + rng.normal(scale=noise_std * a, size=loop.shape)
            xs[row] = preprocess(loop, m)
            ys[row] = int(family)
            row += 1
    return xs, ys


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; the defaults match the reference setup
    (Adam, learning rate 1e-4, 9 epochs)."""

    learning_rate: float = 1e-4
    epochs: int = 9
    batch_size: int = 8
    hidden: tuple[int, ...] = (256, 128)
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1 or not self.hidden:
            raise InvalidInputError(f"invalid training configuration: {self}")


@dataclass
class NetworkModel:
    """Feed-forward softmax classifier: weights, biases and training metadata."""

    m: int
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"
    training: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.layer_sizes[-1] != N_CLASSES:
            raise ConfigurationError(f"output layer must have {N_CLASSES} units, got {self.layer_sizes[-1]}")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_sizes[i], self.layer_sizes[i + 1]) or b.shape != (self.layer_sizes[i + 1],):
                raise ConfigurationError(f"layer {i} has inconsistent shapes {w.shape} / {b.shape}")


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _forward(model: NetworkModel, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Return hidden activations and softmax probabilities for a batch."""
    acts = [x]
    h = x
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        h = np.maximum(h @ w + b, 0.0)
        acts.append(h)
    logits = h @ model.weights[-1] + model.biases[-1]
    return acts, _softmax(logits)


def _init_network(m: int, hidden: tuple[int, ...], rng: np.random.Generator) -> NetworkModel:
    sizes = [2 * m, *hidden, N_CLASSES]
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return NetworkModel(m=m, layer_sizes=sizes, weights=weights, biases=biases)


def network_gradients(model: NetworkModel, x: np.ndarray, y: np.ndarray
                      ) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Cross-entropy loss and its gradients for a labelled batch."""
    acts, probs = _forward(model, x)
    n = len(x)
    loss = float(-np.mean(np.log(probs[np.arange(n), y] + 1e-300)))
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads_w, grads_b = [], []
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w.append(acts[i].T @ delta)
        grads_b.append(delta.sum(axis=0))
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0)
    return loss, grads_w[::-1], grads_b[::-1]


def train(dataset: tuple[np.ndarray, np.ndarray], hp: TrainConfig | None = None) -> NetworkModel:
    """Train the classifier with Adam; deterministic for a fixed seed.

    Records per-epoch mean loss and the final training accuracy in
    ``model.training``.
    """
    hp = hp or TrainConfig()
    x, y = dataset
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or len(x) != len(y) or len(x) == 0:
        raise InvalidInputError(f"dataset shapes are inconsistent: {x.shape}, {y.shape}")
    if x.shape[1] % 2 != 0:
        raise ConfigurationError("feature length must be even (x block + y block)")
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise InvalidInputError("labels must be family codes 0..8")

    rng = np.random.default_rng(hp.seed)
    model = _init_network(x.shape[1] // 2, hp.hidden, rng)

    params = model.weights + model.biases
    mom = [np.zeros_like(p) for p in params]
    vel = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    losses = []
    for _ in range(hp.epochs):
        order = rng.permutation(len(x))
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, len(x), hp.batch_size):
            idx = order[lo:lo + hp.batch_size]
            loss, gw, gb = network_gradients(model, x[idx], y[idx])
            epoch_loss += loss
            n_batches += 1
            step += 1
            for p, g, mo, ve in zip(params, gw + gb, mom, vel):
                mo *= beta1
                mo += (1 - beta1) * g
                ve *= beta2
                ve += (1 - beta2) * g * g
                m_hat = mo / (1 - beta1**step)
                v_hat = ve / (1 - beta2**step)
                p -= hp.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        losses.append(epoch_loss / n_batches)

    _, probs = _forward(model, x)
    accuracy = float(np.mean(probs.argmax(axis=1) == y))
    model.training = {
        "optimizer": "adam",
        "learning_rate": hp.learning_rate,
        "epochs": hp.epochs,
        "batch_size": hp.batch_size,
        "seed": hp.seed,
        "loss_curve": losses,
        "final_accuracy": accuracy,
    }
    return model


def classify(model: NetworkModel, fv) -> np.ndarray:
    """Class probabilities for one feature vector (argmax = predicted family)."""
    x = np.asarray(fv, dtype=float)
    if x.shape != (model.layer_sizes[0],):
        raise InvalidInputError(f"feature vector must have length {model.layer_sizes[0]}, got {x.shape}")
    _, probs = _forward(model, x[None, :])
    return probs[0]


def classify_points(model: NetworkModel, points) -> np.ndarray:
    """Convenience wrapper: preprocess a raw loop, then classify."""
    return classify(model, preprocess(points, model.m))


def residual_oracle(points, opts: fitter.FitOptions | None = None
                    ) -> tuple[CurveFamily, np.ndarray, dict[CurveFamily, fitter.FitResult]]:
    """Classify a loop by fitting every family and comparing geometric misfit.

    The score per family is the mean squared first-order geometric
    distance of the points to its best-fit curve, inflated by a small
    complexity penalty so that degenerate super-families do not shadow
    their special cases.  Returns the winning family, pseudo-probabilities
    over all nine families, and the per-family fit results.
    """
    pts = np.asarray(points, dtype=float)
    fits: dict[CurveFamily, fitter.FitResult] = {}
    scores = np.full(N_CLASSES, np.inf)
    for family in CurveFamily:
        try:
            res = fitter.lm_fit(family, pts, opts=opts)
        except Exception:
            continue
        fits[family] = res
        d = fitter.sampson_distances(res.model, pts)
        scores[int(family)] = float(np.mean(d**2)) * (1.0 + _COMPLEXITY_PENALTY * curves.degree(family))
    if not np.any(np.isfinite(scores)):
        raise InvalidInputError("no family could be fitted to the points")
    weights = 1.0 / (scores + 1e-30)
    probs = weights / weights.sum()
    return CurveFamily(int(np.argmin(scores))), probs, fits


def save_model(model: NetworkModel, path) -> None:
    """Persist weights plus architecture and training metadata as JSON."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "m": model.m,
        "layer_sizes": model.layer_sizes,
        "activation": model.activation,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "training": model.training,
    }
    Path(path).write_text(json.dumps(payload))


def load_model(path) -> NetworkModel:
    payload = json.loads(Path(path).read_text())
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ConfigurationError(f"unsupported model format version {version!r}")
    return NetworkModel(
        m=int(payload["m"]),
        layer_sizes=[int(s) for s in payload["layer_sizes"]],
        weights=[np.asarray(w, dtype=float) for w in payload["weights"]],
        biases=[np.asarray(b, dtype=float) for b in payload["biases"]],
        activation=payload.get("activation", "relu"),
        training=payload.get("training", {}),
    )


def dataset_to_csv(dataset: tuple[np.ndarray, np.ndarray], path) -> None:
    """Write (label, features...) rows."""
    x, y = dataset
    out = np.column_stack([y.astype(float), x])
    np.savetxt(path, out, delimiter=",", fmt="%.17g")


def dataset_from_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return data[:, 1:], data[:, 0].astype(np.int64)
