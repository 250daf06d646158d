"""Differentiable classifiers over flat parameter vectors.

Both models expose ``init``, ``logits`` and ``loss_and_gradient``; the loss is
the mean softmax cross-entropy over the given rows.
"""
from __future__ import annotations

import numpy as np


def _softmax_xent(z: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = len(y)
    loss = -logp[np.arange(n), y].mean()
    dz = np.exp(logp)
    dz[np.arange(n), y] -= 1.0
    return float(loss), dz / n


class LogisticModel:
    """Multinomial logistic regression; params = [W (d*C), b (C)]."""

    name = "logistic"

    def __init__(self, n_features: int, n_classes: int):
        self.d = n_features
        self.c = n_classes

    @property
    def dimension(self) -> int:
        return self.d * self.c + self.c

    def init(self, rng: np.random.Generator | None = None) -> np.ndarray:
        return np.zeros(self.dimension)

    def _unpack(self, w):
        W = w[: self.d * self.c].reshape(self.d, self.c)
        b = w[self.d * self.c:]
        return W, b

    def logits(self, w, X):
        W, b = self._unpack(w)
        return X @ W + b

    def loss_and_gradient(self, w, X, y):
        W, b = self._unpack(w)
        loss, dz = _softmax_xent(X @ W + b, y)
        return loss, np.concatenate([(X.T @ dz).ravel(), dz.sum(axis=0)])


class MLPModel:
    """One tanh hidden layer; params = [W1 (d*H), b1 (H), W2 (H*C), b2 (C)].

    The output layer starts at zero so the initial predictor is uniform.
    """

    name = "mlp"

    def __init__(self, n_features: int, n_classes: int, hidden: int = 32):
        self.d = n_features
        self.c = n_classes
        self.h = hidden

    @property
    def dimension(self) -> int:
        return self.d * self.h + self.h + self.h * self.c + self.c

    def init(self, rng: np.random.Generator | None = None) -> np.ndarray:
        w = np.zeros(self.dimension)
        if rng is not None:
            w[: self.d * self.h] = rng.normal(0.0, 1.0 / np.sqrt(self.d), size=self.d * self.h)
        return w

    def _unpack(self, w):
        d, h, c = self.d, self.h, self.c
        i = 0
        W1 = w[i:i + d * h].reshape(d, h); i += d * h
        b1 = w[i:i + h]; i += h
        W2 = w[i:i + h * c].reshape(h, c); i += h * c
        b2 = w[i:i + c]
        return W1, b1, W2, b2

    def logits(self, w, X):
        W1, b1, W2, b2 = self._unpack(w)
        return np.tanh(X @ W1 + b1) @ W2 + b2

    def loss_and_gradient(self, w, X, y):
        W1, b1, W2, b2 = self._unpack(w)
        a = np.tanh(X @ W1 + b1)
        loss, dz = _softmax_xent(a @ W2 + b2, y)
        da = (dz @ W2.T) * (1.0 - a * a)
        grad = np.concatenate([
            (X.T @ da).ravel(), da.sum(axis=0),
            (a.T @ dz).ravel(), dz.sum(axis=0),
        ])
        return loss, grad


def make_model(name: str, n_features: int, n_classes: int, hidden: int = 32):
    if name == "logistic":
        return LogisticModel(n_features, n_classes)
    if name == "mlp":
        return MLPModel(n_features, n_classes, hidden)
    raise ValueError(f"unknown model family {name!r}")


def loss_and_gradient(model, w: np.ndarray, shard, batch_indices=None):
    """Mean loss and exact gradient on ``shard`` rows ``batch_indices`` (all rows if None)."""
    w = np.asarray(w, dtype=float)
    if w.shape != (model.dimension,):
        raise ValueError(f"parameter vector has shape {w.shape}, model expects ({model.dimension},)")
    if shard.features.shape[1] != model.d:
        raise ValueError(f"shard has {shard.features.shape[1]} features, model expects {model.d}")
    if batch_indices is None:
        X, y = shard.features, shard.labels
    else:
        idx = np.asarray(batch_indices, dtype=np.int64)
        if idx.size == 0:
            raise ValueError("empty batch")
        if idx.min() < 0 or idx.max() >= len(shard.labels):
            raise IndexError("batch index out of range")
        X, y = shard.features[idx], shard.labels[idx]
    return model.loss_and_gradient(w, X, y)


def accuracy(model, w, X, y) -> float:
    if len(y) == 0:
        return 0.0
    return float(np.mean(np.argmax(model.logits(w, X), axis=1) == y))
