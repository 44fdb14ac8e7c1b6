"""Fully connected ReLU network with dropout, softmax head and Adam training."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

HIDDEN_WIDTHS = (512, 512, 256, 256, 128, 128)
DROPOUT = (0.2, 0.5, 0.5, 0.5, 0.5, 0.5)
EPOCHS = {"exp1": 500, "exp2": 50, "exp3": 100}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    use_dropout: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1) or self.epsilon <= 0:
            raise DataError("invalid Adam parameters")


@dataclass
class MlpModel:
    widths: list[int]                    # [input, hidden..., n_classes]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout: list[float]                 # one rate per hidden layer
    seed: int = 0
    classes: list[str] = field(default_factory=list)
    train_config: dict = field(default_factory=dict)
    history: list[float] = field(default_factory=list)
    fit_ids: frozenset = field(default=frozenset(), compare=False)

    @property
    def n_hidden(self) -> int:
        return len(self.widths) - 2

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "MlpModel":
        return dataclasses.replace(
            self, weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases], history=list(self.history),
        )

    def predict_proba(self, X) -> np.ndarray:
        return mlp_predict(self, X)

    def predict(self, X) -> np.ndarray:
        idx = np.argmax(mlp_predict(self, X), axis=1)
        if self.classes:
            return np.asarray([self.classes[i] for i in idx], dtype=object)
        return idx

    def to_dict(self) -> dict:
        return {
            "widths": list(self.widths), "dropout": list(self.dropout), "seed": self.seed,
            "classes": list(self.classes), "train_config": dict(self.train_config),
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        widths = [int(w) for w in d["widths"]]
        weights = [np.asarray(w, dtype=float).reshape(widths[i], widths[i + 1])
                   for i, w in enumerate(d["weights"])]
        biases = [np.asarray(b, dtype=float) for b in d["biases"]]
        return cls(widths, weights, biases, [float(r) for r in d["dropout"]], int(d["seed"]),
                   list(d.get("classes", [])), dict(d.get("train_config", {})))


def mlp_init(input_dim: int, n_classes: int, seed: int = 0,
             hidden=HIDDEN_WIDTHS, dropout=DROPOUT) -> MlpModel:
    """He-normal weights (variance 2 / fan_in) and zero biases."""
    if input_dim < 1 or n_classes < 1:
        raise DataError("input_dim and n_classes must be positive")
    hidden = list(hidden)
    dropout = list(dropout)
    if len(dropout) != len(hidden):
        raise DataError("need one dropout rate per hidden layer")
    if any(not 0 <= r < 1 for r in dropout):
        raise DataError("dropout rates must lie in [0, 1)")
    widths = [int(input_dim), *hidden, int(n_classes)]
    rng = np.random.default_rng(seed)
    weights = [rng.standard_normal((a, b)) * np.sqrt(2.0 / a) for a, b in zip(widths[:-1], widths[1:])]
    biases = [np.zeros(b) for b in widths[1:]]
    return MlpModel(widths, weights, biases, dropout, seed)


def softmax(z) -> np.ndarray:
    z = z - np.max(z, axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(m: MlpModel, X, masks=None):
    """Return (logits, cache). ``masks`` holds inverted-dropout multipliers per hidden layer."""
    h = X
    cache = []
    for layer in range(m.n_hidden):
        z = h @ m.weights[layer] + m.biases[layer]
        a = np.maximum(z, 0.0)
        if masks is not None:
            a = a * masks[layer]
        cache.append((h, z))
        h = a
    logits = h @ m.weights[-1] + m.biases[-1]
    cache.append((h, None))
    return logits, cache


def loss_and_grads(m: MlpModel, X, y, masks=None):
    """Mean cross-entropy and its gradients, ordered like ``m.params()``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    logits, cache = forward(m, X, masks)
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -float(np.mean(logp[np.arange(n), y]))

    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads_w = [None] * len(m.weights)
    grads_b = [None] * len(m.biases)
    h_last = cache[-1][0]
    grads_w[-1] = h_last.T @ delta
    grads_b[-1] = delta.sum(axis=0)
    upstream = delta @ m.weights[-1].T
    for layer in reversed(range(m.n_hidden)):
        h_in, z = cache[layer]
        if masks is not None:
            upstream = upstream * masks[layer]
        dz = upstream * (z > 0)
        grads_w[layer] = h_in.T @ dz
        grads_b[layer] = dz.sum(axis=0)
        if layer:
            upstream = dz @ m.weights[layer].T
    return loss, [g for pair in zip(grads_w, grads_b) for g in pair]


def _check_inputs(m: MlpModel, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != m.widths[0]:
        raise DataError(f"dimension mismatch: model expects {m.widths[0]} features, got {X.shape[1]}")
    return X


def mlp_predict(m: MlpModel, X) -> np.ndarray:
    """Class probabilities from a dropout-free forward pass."""
    logits, _ = forward(m, _check_inputs(m, X))
    return softmax(logits)


def mean_loss(m: MlpModel, X, y) -> float:
    return loss_and_grads(m, X, y)[0]


def mlp_train(m: MlpModel, X, y, cfg: TrainConfig = TrainConfig(), ids=()) -> MlpModel:
    """Mini-batch Adam on softmax cross-entropy; returns a trained copy.

    ``history`` on the result holds the full-data, dropout-free loss before
    training and after every epoch.
    """
    X = _check_inputs(m, X)
    y = np.asarray(y, dtype=np.int64)
    if y.shape[0] != X.shape[0]:
        raise DataError("X and y row counts differ")
    if y.size and (y.min() < 0 or y.max() >= m.widths[-1]):
        raise DataError(f"labels must lie in [0, {m.widths[-1]})")
    m = m.copy()
    rng = np.random.default_rng(cfg.seed)
    params = m.params()
    first = [np.zeros_like(p) for p in params]
    second = [np.zeros_like(p) for p in params]
    step = 0
    history = [mean_loss(m, X, y)]
    n = X.shape[0]
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = perm[start:start + cfg.batch_size]
            masks = None
            if cfg.use_dropout and any(r > 0 for r in m.dropout):
                masks = [
                    (rng.random((batch.size, w)) >= r) / (1.0 - r)
                    for w, r in zip(m.widths[1:-1], m.dropout)
                ]
            loss, grads = loss_and_grads(m, X[batch], y[batch], masks)
            if not np.isfinite(loss):
                raise DataError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}: "
                    f"max |param| = {max(np.abs(p).max() for p in params):.3g}"
                )
            step += 1
            c1 = 1.0 - cfg.beta1 ** step
            c2 = 1.0 - cfg.beta2 ** step
            for p, g, mo, v in zip(params, grads, first, second):
                mo *= cfg.beta1
                mo += (1.0 - cfg.beta1) * g
                v *= cfg.beta2
                v += (1.0 - cfg.beta2) * g * g
                p -= cfg.learning_rate * (mo / c1) / (np.sqrt(v / c2) + cfg.epsilon)
        history.append(mean_loss(m, X, y))
    m.history = history
    m.train_config = dataclasses.asdict(cfg)
    m.fit_ids = frozenset(ids)
    return m
