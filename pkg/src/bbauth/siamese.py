"""From-scratch siamese multilayer perceptron with contrastive loss.

Architecture: one batch-normalization stage on the input followed by
four dense+ReLU layers of 400, 200, 100, and 50 units (sizes
configurable for small test networks). Both pair branches share
parameters; a training step passes the concatenated pair batch through
the network once, so batch statistics cover both branches. Training is
single-threaded and bitwise deterministic for a fixed seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePairs, ShapeMismatch

DEFAULT_HIDDEN = (400, 200, 100, 50)
_BN_EPS = 1e-5
_BN_MOMENTUM = 0.9


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 50  # published setting is 2000; 50 is the desk-scale default
    batch_size: int = 16
    margin: float = 1.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.margin <= 0:
            raise ValueError("margin must be > 0")


@dataclass
class NetworkParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    bn_scale: np.ndarray
    bn_shift: np.ndarray
    bn_mean: np.ndarray
    bn_var: np.ndarray
    seed: int

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return tuple(w.shape[1] for w in self.weights)

    def trainable(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases, self.bn_scale, self.bn_shift]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.bn_scale.copy(),
            self.bn_shift.copy(),
            self.bn_mean.copy(),
            self.bn_var.copy(),
            self.seed,
        )


@dataclass(frozen=True)
class PairSet:
    a: np.ndarray  # (n_pairs, dim)
    b: np.ndarray
    labels: np.ndarray  # 1 = same subject, 0 = different

    def __post_init__(self) -> None:
        if self.a.shape != self.b.shape or self.a.shape[0] != self.labels.shape[0]:
            raise ShapeMismatch("pair arrays must align")


def init_network(input_dim: int, seed: int, hidden: tuple[int, ...] = DEFAULT_HIDDEN) -> NetworkParams:
    """Fan-in-scaled uniform weights, zero biases, identity batch norm."""
    if input_dim < 1:
        raise ValueError("input_dim must be >= 1")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    fan_in = input_dim
    for units in hidden:
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, units)))
        biases.append(np.zeros(units))
        fan_in = units
    return NetworkParams(
        weights,
        biases,
        bn_scale=np.ones(input_dim),
        bn_shift=np.zeros(input_dim),
        bn_mean=np.zeros(input_dim),
        bn_var=np.ones(input_dim),
        seed=seed,
    )


def _forward_full(params: NetworkParams, x: np.ndarray, train: bool):
    """Forward pass keeping the caches needed for backprop."""
    if train:
        mu = x.mean(axis=0)
        var = x.var(axis=0)
    else:
        mu, var = params.bn_mean, params.bn_var
    inv_std = 1.0 / np.sqrt(var + _BN_EPS)
    xhat = (x - mu) * inv_std
    h = params.bn_scale * xhat + params.bn_shift
    activations = [h]
    for w, b in zip(params.weights, params.biases):
        h = np.maximum(h @ w + b, 0.0)
        activations.append(h)
    cache = {"mu": mu, "var": var, "xhat": xhat, "activations": activations}
    return h, cache


def forward(params: NetworkParams, x, mode: str = "infer") -> np.ndarray:
    """Embed one sample (1-D input) or a batch (2-D input).

    Train mode normalizes with batch statistics, infer mode with the
    stored running statistics.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.shape[1] != params.input_dim:
        raise ShapeMismatch(f"input dim {arr.shape[1]} != network dim {params.input_dim}")
    if mode not in ("train", "infer"):
        raise ValueError("mode must be 'train' or 'infer'")
    out, _ = _forward_full(params, arr, train=(mode == "train"))
    return out[0] if single else out


def contrastive_loss(d: float, label: int, margin: float) -> float:
    """d^2 for same-subject pairs, hinge(margin - d)^2 for impostor pairs."""
    if d < 0:
        raise ValueError("distance must be >= 0")
    if label == 1:
        return d * d
    return max(0.0, margin - d) ** 2


def _pair_loss_and_embedding_grads(e_a: np.ndarray, e_b: np.ndarray, labels: np.ndarray, margin: float):
    diff = e_a - e_b
    d = np.sqrt((diff * diff).sum(axis=1))
    n = len(labels)
    pos = labels == 1
    hinge = np.maximum(0.0, margin - d)
    losses = np.where(pos, d * d, hinge * hinge)
    loss = float(losses.mean())

    # dL/d(diff): positives 2*diff, negatives -2*hinge*diff/d (0 at d = 0)
    grad = np.zeros_like(diff)
    grad[pos] = 2.0 * diff[pos]
    neg = ~pos
    safe_d = np.where(d > 0, d, 1.0)
    grad[neg] = (-2.0 * hinge[neg] / safe_d[neg])[:, None] * diff[neg]
    grad[neg & (d == 0)] = 0.0
    grad /= n
    return loss, grad, -grad


def _backward(params: NetworkParams, cache: dict, d_out: np.ndarray):
    """Gradients of the trainable parameters given d(loss)/d(embedding)."""
    acts = cache["activations"]
    grads_w = [np.zeros_like(w) for w in params.weights]
    grads_b = [np.zeros_like(b) for b in params.biases]
    delta = d_out
    for layer in reversed(range(len(params.weights))):
        delta = delta * (acts[layer + 1] > 0)
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        delta = delta @ params.weights[layer].T
    # batch-norm backward: only the affine parameters are trainable, and
    # the batch statistics depend on the input alone, so no gradient
    # flows back past the scale/shift
    xhat = cache["xhat"]
    d_scale = (delta * xhat).sum(axis=0)
    d_shift = delta.sum(axis=0)
    return grads_w, grads_b, d_scale, d_shift


def loss_and_grads(params: NetworkParams, pairs: PairSet, margin: float):
    """Mean contrastive loss over the batch and gradients for every
    trainable array, using train-mode (batch-statistic) normalization
    over the concatenated pair batch."""
    n = pairs.a.shape[0]
    stacked = np.vstack([pairs.a, pairs.b])
    out, cache = _forward_full(params, stacked, train=True)
    e_a, e_b = out[:n], out[n:]
    loss, g_a, g_b = _pair_loss_and_embedding_grads(e_a, e_b, pairs.labels, margin)
    grads_w, grads_b, d_scale, d_shift = _backward(params, cache, np.vstack([g_a, g_b]))
    return loss, [*grads_w, *grads_b, d_scale, d_shift], cache


def grad_check(
    params: NetworkParams,
    pairs: PairSet,
    margin: float = 1.0,
    h: float = 1e-5,
    grads: list[np.ndarray] | None = None,
) -> float:
    """Max relative error of analytic gradients vs central finite differences.

    Checks every trainable parameter; pass `grads` to validate an
    externally supplied (possibly corrupted) gradient set instead of
    the freshly computed one.
    """
    if grads is None:
        _, grads, _ = loss_and_grads(params, pairs, margin)

    def loss_at(p: NetworkParams) -> float:
        value, _, _ = loss_and_grads(p, pairs, margin)
        return value

    worst = 0.0
    work = params.copy()
    arrays = work.trainable()
    for analytic, arr in zip(grads, arrays):
        flat = arr.reshape(-1)
        a_flat = analytic.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            up = loss_at(work)
            flat[i] = original - h
            down = loss_at(work)
            flat[i] = original
            numeric = (up - down) / (2 * h)
            denom = max(abs(a_flat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(a_flat[i] - numeric) / denom)
    return worst


@dataclass
class TrainResult:
    params: NetworkParams
    epoch_losses: list[float] = field(default_factory=list)


def _adam_step(values, grads, moments1, moments2, t, config: TrainConfig) -> None:
    for v, g, m1, m2 in zip(values, grads, moments1, moments2):
        m1 *= config.beta1
        m1 += (1 - config.beta1) * g
        m2 *= config.beta2
        m2 += (1 - config.beta2) * g * g
        m1_hat = m1 / (1 - config.beta1**t)
        m2_hat = m2 / (1 - config.beta2**t)
        v -= config.learning_rate * m1_hat / (np.sqrt(m2_hat) + config.adam_eps)


def train(pairs: PairSet, config: TrainConfig, params: NetworkParams | None = None,
          hidden: tuple[int, ...] = DEFAULT_HIDDEN) -> TrainResult:
    """Mini-batch adaptive-moment training; returns final parameters and
    the per-epoch loss trace. Identical (seed, pairs, config) runs are
    bitwise identical."""
    labels = pairs.labels
    if labels.min() == labels.max():
        raise DegeneratePairs("need both positive and negative pairs")
    if params is None:
        params = init_network(pairs.a.shape[1], config.seed, hidden)
    rng = np.random.default_rng(config.seed)
    arrays = params.trainable()
    moments1 = [np.zeros_like(a) for a in arrays]
    moments2 = [np.zeros_like(a) for a in arrays]
    step = 0
    losses: list[float] = []
    n = pairs.a.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = PairSet(pairs.a[idx], pairs.b[idx], labels[idx])
            loss, grads, cache = loss_and_grads(params, batch, config.margin)
            params.bn_mean = _BN_MOMENTUM * params.bn_mean + (1 - _BN_MOMENTUM) * cache["mu"]
            params.bn_var = _BN_MOMENTUM * params.bn_var + (1 - _BN_MOMENTUM) * cache["var"]
            step += 1
            _adam_step(arrays, grads, moments1, moments2, step, config)
            epoch_losses.append(loss)
        losses.append(float(np.mean(epoch_losses)))
    return TrainResult(params, losses)


def siamese_score(params: NetworkParams, enroll_samples, verify_sample) -> float:
    """exp(-d) where d is the mean Euclidean distance from the verify
    embedding to the enrollment embeddings (infer mode)."""
    enroll = np.asarray(enroll_samples, dtype=float)
    if enroll.ndim == 1:
        enroll = enroll.reshape(1, -1)
    e_enroll = forward(params, enroll, "infer")
    e_verify = forward(params, np.asarray(verify_sample, dtype=float), "infer")
    d = float(np.linalg.norm(e_enroll - e_verify, axis=1).mean())
    return float(np.exp(-d))


def minmax_postprocess(scores) -> list[float]:
    """Order-preserving MinMax of a score batch; constant batches map to 0.5."""
    arr = np.asarray(list(scores), dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one score")
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return [0.5] * arr.size
    return list((arr - lo) / (hi - lo))


# --- pair construction and checkpoints -----------------------------------

def build_pair_set(
    samples_by_subject: dict[str, list[np.ndarray]],
    seed: int,
    negatives_per_positive: int = 1,
) -> PairSet:
    """All within-subject pairs as positives plus seeded cross-subject
    negatives at the requested ratio (default 1:1)."""
    rng = np.random.default_rng(seed)
    subjects = sorted(samples_by_subject)
    a_rows, b_rows, labels = [], [], []
    for subject in subjects:
        samples = samples_by_subject[subject]
        for i in range(len(samples)):
            for j in range(i + 1, len(samples)):
                a_rows.append(samples[i])
                b_rows.append(samples[j])
                labels.append(1)
    n_negative = len(a_rows) * negatives_per_positive
    if len(subjects) < 2:
        raise DegeneratePairs("need samples from at least two subjects")
    for _ in range(n_negative):
        s1, s2 = rng.choice(len(subjects), size=2, replace=False)
        a_rows.append(samples_by_subject[subjects[s1]][rng.integers(len(samples_by_subject[subjects[s1]]))])
        b_rows.append(samples_by_subject[subjects[s2]][rng.integers(len(samples_by_subject[subjects[s2]]))])
        labels.append(0)
    return PairSet(np.array(a_rows, dtype=float), np.array(b_rows, dtype=float),
                   np.array(labels, dtype=int))


_CHECKPOINT_VERSION = 1


def config_hash(config: TrainConfig) -> str:
    payload = json.dumps(vars(config), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


def save_checkpoint(params: NetworkParams, path, config: TrainConfig | None = None) -> None:
    arrays = {
        "version": np.array([_CHECKPOINT_VERSION]),
        "seed": np.array([params.seed]),
        "n_layers": np.array([len(params.weights)]),
        "bn_scale": params.bn_scale,
        "bn_shift": params.bn_shift,
        "bn_mean": params.bn_mean,
        "bn_var": params.bn_var,
    }
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    if config is not None:
        arrays["config_hash"] = np.frombuffer(bytes.fromhex(config_hash(config)), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> NetworkParams:
    with np.load(path) as data:
        version = int(data["version"][0])
        if version != _CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        n_layers = int(data["n_layers"][0])
        return NetworkParams(
            [data[f"w{i}"] for i in range(n_layers)],
            [data[f"b{i}"] for i in range(n_layers)],
            data["bn_scale"],
            data["bn_shift"],
            data["bn_mean"],
            data["bn_var"],
            int(data["seed"][0]),
        )
