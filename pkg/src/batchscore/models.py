"""Synthetic classification data and small analytic-gradient models.

Desk-scale stand-ins for the heavy benchmarks: Gaussian cluster data with
optional label noise, softmax regression, and a one-hidden-layer tanh MLP.
Losses are cross-entropy with a log-sum-exp stabilizer; gradients are written
out analytically so training stays deterministic and fast without a DL
framework.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ARCH_SOFTMAX = "softmax"
ARCH_MLP = "mlp"


class DivergenceError(RuntimeError):
    """Raised when parameters, logits, or gradients stop being finite."""


@dataclass(frozen=True)
class DatasetSpec:
    """Gaussian cluster mixture with a fixed 80/20 train/test split."""

    n_samples: int = 2000
    n_features: int = 20
    n_classes: int = 5
    cluster_spread: float = 1.0
    label_noise: float = 0.15
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")
        if self.n_classes > self.n_samples:
            raise ValueError(
                f"n_classes {self.n_classes} exceeds n_samples {self.n_samples}"
            )
        if self.n_features < 1 or self.n_classes < 1:
            raise ValueError("n_features and n_classes must be positive")
        if self.cluster_spread <= 0:
            raise ValueError(f"cluster_spread must be positive, got {self.cluster_spread}")
        if not 0.0 <= self.label_noise < 1.0:
            raise ValueError(f"label_noise must lie in [0, 1), got {self.label_noise}")
        if self.label_noise > 0 and self.n_classes < 2:
            raise ValueError("label_noise needs at least two classes")


@dataclass(frozen=True)
class Dataset:
    """Train/test arrays; ``y_train_clean`` keeps the pre-noise train labels."""

    X_train: np.ndarray
    y_train: np.ndarray
    y_train_clean: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray

    @property
    def n_train(self) -> int:
        return int(self.y_train.size)


def make_synthetic_dataset(spec: DatasetSpec) -> Dataset:
    """Deterministic cluster data: same spec and seed, same bytes.

    Label noise re-draws the chosen fraction of *train* labels uniformly among
    the other classes (so a noised label always differs from the clean one);
    test labels stay clean so accuracy stays interpretable.
    """
    rng = np.random.default_rng(spec.seed)
    k, d, n = spec.n_classes, spec.n_features, spec.n_samples

    centers = rng.normal(size=(k, d))
    labels = rng.integers(0, k, size=n)
    X = centers[labels] + spec.cluster_spread * rng.standard_normal((n, d))

    perm = rng.permutation(n)
    n_train = int(round(0.8 * n))
    train_idx, test_idx = perm[:n_train], perm[n_train:]

    y_train_clean = labels[train_idx].copy()
    y_train = y_train_clean.copy()
    if spec.label_noise > 0:
        flip = rng.random(n_train) < spec.label_noise
        offsets = rng.integers(1, k, size=n_train)
        y_train[flip] = (y_train[flip] + offsets[flip]) % k

    return Dataset(
        X_train=X[train_idx],
        y_train=y_train,
        y_train_clean=y_train_clean,
        X_test=X[test_idx],
        y_test=labels[test_idx],
    )


@dataclass(frozen=True)
class ModelSpec:
    arch: str = ARCH_SOFTMAX
    hidden: int = 32
    init_seed: int = 0

    def __post_init__(self) -> None:
        if self.arch not in (ARCH_SOFTMAX, ARCH_MLP):
            raise ValueError(f"unknown arch {self.arch!r}")
        if self.arch == ARCH_MLP and self.hidden < 1:
            raise ValueError(f"hidden must be positive, got {self.hidden}")


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(logits)):
        raise DivergenceError("non-finite logits")
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


class _quiet_overflow(np.errstate):
    """Silence numpy overflow noise where non-finite results are checked explicitly."""

    def __init__(self) -> None:
        super().__init__(over="ignore", invalid="ignore")


class SoftmaxModel:
    """Linear classifier with cross-entropy loss."""

    def __init__(self, n_features: int, n_classes: int, init_seed: int):
        rng = np.random.default_rng(init_seed)
        self.params = {
            "W": 0.01 * rng.standard_normal((n_features, n_classes)),
            "b": np.zeros(n_classes),
        }
        self.n_classes = n_classes

    def logits(self, X: np.ndarray) -> np.ndarray:
        with _quiet_overflow():
            return X @ self.params["W"] + self.params["b"]

    def loss_per_sample(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        logp = _log_softmax(self.logits(X))
        return -logp[np.arange(y.size), y]

    def grads(self, X: np.ndarray, y: np.ndarray) -> dict[str, np.ndarray]:
        """Gradient of the mean batch cross-entropy."""
        with _quiet_overflow():
            p = np.exp(_log_softmax(self.logits(X)))
            p[np.arange(y.size), y] -= 1.0
            g = p / y.size
            return {"W": X.T @ g, "b": g.sum(axis=0)}


class MlpModel:
    """One tanh hidden layer; otherwise the same contract as SoftmaxModel."""

    def __init__(self, n_features: int, n_classes: int, hidden: int, init_seed: int):
        rng = np.random.default_rng(init_seed)
        self.params = {
            "W1": rng.standard_normal((n_features, hidden)) / math.sqrt(n_features),
            "b1": np.zeros(hidden),
            "W2": rng.standard_normal((hidden, n_classes)) / math.sqrt(hidden),
            "b2": np.zeros(n_classes),
        }
        self.n_classes = n_classes

    def _hidden(self, X: np.ndarray) -> np.ndarray:
        with _quiet_overflow():
            return np.tanh(X @ self.params["W1"] + self.params["b1"])

    def logits(self, X: np.ndarray) -> np.ndarray:
        with _quiet_overflow():
            return self._hidden(X) @ self.params["W2"] + self.params["b2"]

    def loss_per_sample(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        logp = _log_softmax(self.logits(X))
        return -logp[np.arange(y.size), y]

    def grads(self, X: np.ndarray, y: np.ndarray) -> dict[str, np.ndarray]:
        h = self._hidden(X)
        with _quiet_overflow():
            p = np.exp(_log_softmax(h @ self.params["W2"] + self.params["b2"]))
            p[np.arange(y.size), y] -= 1.0
            g = p / y.size
            dh = (g @ self.params["W2"].T) * (1.0 - h * h)
            return {
                "W1": X.T @ dh,
                "b1": dh.sum(axis=0),
                "W2": h.T @ g,
                "b2": g.sum(axis=0),
            }


Model = SoftmaxModel | MlpModel


def build_model(spec: ModelSpec, n_features: int, n_classes: int) -> Model:
    if spec.arch == ARCH_SOFTMAX:
        return SoftmaxModel(n_features, n_classes, spec.init_seed)
    return MlpModel(n_features, n_classes, spec.hidden, spec.init_seed)


def mean_batch_loss(model: Model, X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over a batch, plus the per-sample losses.

    The mean is exactly the average of the returned per-sample values; the
    per-sample array exists for instrumentation only and the production
    scoring path never reads it.
    """
    if y.size == 0:
        raise ValueError("batch must be non-empty")
    per_sample = model.loss_per_sample(X, y)
    if not np.all(np.isfinite(per_sample)):
        raise DivergenceError("non-finite loss")
    return float(per_sample.mean()), per_sample


def sgd_step(model: Model, X: np.ndarray, y: np.ndarray, learning_rate: float, batch_scale: float) -> Model:
    """In-place step: params -= learning_rate * batch_scale * grad(mean loss)."""
    grads = model.grads(X, y)
    lr = learning_rate * batch_scale
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for {name}")
        model.params[name] -= lr * g
    return model


def accuracy(model: Model, X: np.ndarray, y: np.ndarray) -> float:
    return float((model.logits(X).argmax(axis=1) == y).mean())
