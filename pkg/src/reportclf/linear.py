"""Linear classifiers over sparse BOW features.

One-vs-rest logistic regression (log loss) and linear SVM (hinge loss),
both trained by plain stochastic (sub)gradient descent with L2 weight decay.
Training is deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bow import BowVector
from .util import spawn_rng

LOSSES = ("log", "hinge")


@dataclass
class LinearModel:
    weights: np.ndarray  # (num_classes, vocab_size)
    bias: np.ndarray  # (num_classes,)
    loss: str
    l2: float
    classes: list[int]
    final_objective: float = float("nan")

    def scores(self, x: BowVector) -> np.ndarray:
        s = self.bias.copy()
        for i, w in x.entries.items():
            s += self.weights[:, i] * w
        return s

    def predict(self, x: BowVector) -> tuple[int, np.ndarray]:
        s = self.scores(x)
        return self.classes[int(np.argmax(s))], s


def _to_dense(xs: list[BowVector], dim: int) -> np.ndarray:
    mat = np.zeros((len(xs), dim))
    for r, x in enumerate(xs):
        for i, w in x.entries.items():
            mat[r, i] = w
    return mat


def train_linear(
    xs: list[BowVector],
    labels: list[int],
    dim: int,
    loss: str = "log",
    l2: float = 1e-4,
    epochs: int = 50,
    lr: float = 0.1,
    seed: int = 0,
) -> LinearModel:
    """Fit one binary SGD classifier per class (one-vs-rest).

    The log-loss gradient on an example is ``(sigmoid(z) - t) x``; the hinge
    subgradient is ``-t x`` while the margin ``t z`` is below 1 and zero
    otherwise, each plus the L2 term ``l2 * w``. Biases are not regularized.
    """
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")
    if not xs or len(xs) != len(labels):
        raise ValueError("training set empty or labels mismatched")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError(f"training set contains a single class {classes}; need at least two")

    X = _to_dense(xs, dim)
    y = np.asarray(labels)
    W = np.zeros((len(classes), dim))
    b = np.zeros(len(classes))
    rng = spawn_rng(seed, "linear-sgd")
    n = len(xs)
    for _ in range(epochs):
        for r in rng.permutation(n):
            x_row = X[r]
            z = W @ x_row + b
            t = np.where(y[r] == np.asarray(classes), 1.0, -1.0)
            if loss == "log":
                # d/dz of log(1 + exp(-t z)) = -t * sigmoid(-t z)
                coef = -t * _sigmoid(-t * z)
            else:
                coef = np.where(t * z < 1.0, -t, 0.0)
            W -= lr * (np.outer(coef, x_row) + l2 * W)
            b -= lr * coef

    objective = _objective(W, b, X, y, classes, loss, l2)
    return LinearModel(weights=W, bias=b, loss=loss, l2=l2, classes=classes, final_objective=objective)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _objective(W, b, X, y, classes, loss, l2) -> float:
    Z = X @ W.T + b
    T = np.where(y[:, None] == np.asarray(classes)[None, :], 1.0, -1.0)
    M = T * Z
    if loss == "log":
        per = np.logaddexp(0.0, -M)
    else:
        per = np.maximum(0.0, 1.0 - M)
    return float(per.sum(axis=1).mean() + 0.5 * l2 * (W**2).sum())
