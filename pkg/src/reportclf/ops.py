"""Dense numerics for the fixed text-classification architectures.

Everything here operates on plain numpy arrays (float64 in verification
mode; trainers may pass float32). The backward passes elsewhere in the
package are hand-written, so this module also provides a central
finite-difference gradient checker used by the test suite.

Tie-breaking in all max operations is "first index", which keeps gradient
routing deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "identity")


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def apply_activation(x: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return relu(x)
    if activation == "identity":
        return x
    raise ValueError(f"unknown activation {activation!r}")


def conv1d(doc_matrix: np.ndarray, weights: np.ndarray, bias: float = 0.0, activation: str = "relu") -> np.ndarray:
    """Slide an (filt_len x dim) filter over the rows of an (n x dim) matrix.

    Output element i is ``activation(<rows i..i+filt_len, weights> + bias)``;
    the result has length n - filt_len + 1.
    """
    n, dim = doc_matrix.shape
    filt_len, fdim = weights.shape
    if fdim != dim:
        raise ValueError(f"filter width {fdim} != document matrix width {dim}")
    if filt_len > n:
        raise ValueError(f"filter length {filt_len} exceeds document length {n}")
    windows = sliding_windows(doc_matrix, filt_len)
    out = windows @ weights.reshape(-1) + bias
    return apply_activation(out, activation)


def sliding_windows(doc_matrix: np.ndarray, filt_len: int) -> np.ndarray:
    """(n - filt_len + 1, filt_len * dim) view-copy of all length-l windows."""
    n, dim = doc_matrix.shape
    view = np.lib.stride_tricks.sliding_window_view(doc_matrix, (filt_len, dim))
    return view.reshape(n - filt_len + 1, filt_len * dim)


def max_over_time(v: np.ndarray) -> tuple[float, int]:
    """Maximum of a feature vector and the first position attaining it."""
    if v.size == 0:
        raise ValueError("max_over_time of an empty vector")
    pos = int(np.argmax(v))
    return float(v[pos]), pos


def rowwise_max(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row maximum and (first) argmax column of an (n x m) matrix."""
    if mat.ndim != 2 or mat.shape[1] < 1:
        raise ValueError(f"rowwise_max expects an (n, m>=1) matrix, got {mat.shape}")
    arg = np.argmax(mat, axis=1)
    return mat[np.arange(mat.shape[0]), arg], arg


def softmax_xent(logits: np.ndarray, gold: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Stabilized softmax cross-entropy: (loss, probabilities, dloss/dlogits)."""
    if not (0 <= gold < logits.shape[-1]):
        raise ValueError(f"gold class {gold} out of range for {logits.shape[-1]} logits")
    shifted = logits - np.max(logits)
    ez = np.exp(shifted)
    probs = ez / ez.sum()
    loss = float(np.log(ez.sum()) - shifted[gold])
    grad = probs.copy()
    grad[gold] -= 1.0
    return loss, probs, grad


def dropout(v: np.ndarray, rate: float, mode: str, rng: np.random.Generator | None = None) -> np.ndarray:
    """Inverted dropout: zero with probability ``rate`` and scale survivors
    by 1/(1-rate) in train mode; identity in eval mode."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if mode == "eval" or rate == 0.0:
        return v
    if mode != "train":
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    mask = dropout_mask(v.shape, rate, rng)
    return v * mask


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(shape) >= rate) / (1.0 - rate)


def sgd_step(params: np.ndarray, grads: np.ndarray, lr: float) -> np.ndarray:
    if params.shape != grads.shape:
        raise ValueError(f"parameter shape {params.shape} != gradient shape {grads.shape}")
    return params - lr * grads


class AdamState:
    """First/second moment accumulators for Adam, keyed like the gradients."""

    def __init__(self, params: dict[str, np.ndarray]):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(
        self,
        params: dict[str, np.ndarray],
        grads: dict[str, np.ndarray],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.t += 1
        bc1 = 1.0 - beta1**self.t
        bc2 = 1.0 - beta2**self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            params[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    total = np.sqrt(sum(float((g**2).sum()) for g in grads.values()))
    if total <= max_norm or total == 0.0:
        return grads
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}


@dataclass
class GradCheckReport:
    max_rel_error: float
    num_checked: int
    worst_param: str
    worst_index: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def check_gradients(
    loss_and_grads,
    params: dict[str, np.ndarray],
    h: float = 1e-5,
    tolerance: float = 1e-4,
    samples_per_param: int = 20,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    ``loss_and_grads(params)`` must return ``(loss, grads)`` with gradient
    arrays mirroring parameter shapes, and must be deterministic (run it in
    64-bit with dropout disabled). A random subset of coordinates of every
    parameter is probed.
    """
    rng = rng or np.random.default_rng(0)
    _, grads = loss_and_grads(params)
    worst = (0.0, "", -1)
    checked = 0
    for name in sorted(params):
        p = params[name]
        flat_size = p.size
        count = min(samples_per_param, flat_size)
        coords = rng.choice(flat_size, size=count, replace=False)
        for c in coords:
            c = int(c)
            orig = p.flat[c]
            p.flat[c] = orig + h
            loss_plus, _ = loss_and_grads(params)
            p.flat[c] = orig - h
            loss_minus, _ = loss_and_grads(params)
            p.flat[c] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            analytic = grads[name].flat[c]
            # the floor keeps finite-difference rounding noise on true-zero
            # gradients from registering as a large relative error
            denom = max(abs(analytic) + abs(numeric), 1e-6)
            rel = abs(analytic - numeric) / denom
            checked += 1
            if rel > worst[0]:
                worst = (rel, name, c)
    return GradCheckReport(
        max_rel_error=worst[0],
        num_checked=checked,
        worst_param=worst[1],
        worst_index=worst[2],
        tolerance=tolerance,
    )
