"""Small supervised attack models: multinomial logistic regression and a 1-hidden-layer MLP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T

KINDS = ("logreg", "mlp")


@dataclass
class ClassifierConfig:
    hidden_dim: int = 64
    epochs: int = 200
    lr: float = 0.01
    standardize: bool = True


@dataclass
class Classifier:
    kind: str
    weights: list
    n_classes: int
    mean: np.ndarray
    scale: np.ndarray

    @property
    def in_dim(self):
        return len(self.mean)

    def logits(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.in_dim:
            raise T.ShapeError(f"classifier expects {self.in_dim} input columns, got {X.shape}")
        return _forward(self.kind, self.weights, (X - self.mean) / self.scale).data

    def predict_proba(self, X):
        return T.softmax_np(self.logits(X))

    def predict(self, X):
        return self.logits(X).argmax(axis=1)


def _forward(kind, weights, X):
    X = T.Tensor(X)
    if kind == "logreg":
        W, b = weights
        return X @ W + b
    W1, b1, W2, b2 = weights
    return T.relu(X @ W1 + b1) @ W2 + b2


def fit_classifier(X, y, kind="mlp", n_classes=None, cfg=None, seed=0):
    """Full-batch Adam on softmax cross-entropy. Deterministic for a given seed."""
    if kind not in KINDS:
        raise ValueError(f"classifier kind must be one of {KINDS}, got {kind!r}")
    cfg = cfg or ClassifierConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) != len(y) or len(X) == 0:
        raise ValueError("need one label per training row")
    n_classes = n_classes or int(y.max()) + 1
    if len(np.unique(y)) < 2:
        raise ValueError("training labels contain a single category")
    if cfg.standardize:
        mean, scale = X.mean(axis=0), X.std(axis=0)
        scale = np.where(scale > 1e-12, scale, 1.0)
    else:
        mean, scale = np.zeros(X.shape[1]), np.ones(X.shape[1])
    Xs = (X - mean) / scale

    rng = np.random.default_rng(seed)
    d = X.shape[1]
    if kind == "logreg":
        weights = [T.glorot_uniform(rng, d, n_classes), T.Tensor(np.zeros((1, n_classes)), True)]
    else:
        h = cfg.hidden_dim
        weights = [
            T.glorot_uniform(rng, d, h),
            T.Tensor(np.zeros((1, h)), True),
            T.glorot_uniform(rng, h, n_classes),
            T.Tensor(np.zeros((1, n_classes)), True),
        ]
    opt = T.Adam(weights, lr=cfg.lr)
    for _ in range(cfg.epochs):
        loss = T.cross_entropy(_forward(kind, weights, Xs), y)
        T.backward(loss)
        opt.step()
    return Classifier(kind, weights, n_classes, mean, scale)
