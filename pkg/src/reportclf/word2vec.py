"""word2vec training: CBOW and skip-gram with negative sampling.

Both modes optimize the standard SGNS objective

    loss(pair) = -ln s(u . v)  -  sum_i ln s(-u . n_i)

where ``u`` is the prediction vector (the context word's input vector for
skip-gram, the mean of the context input vectors for CBOW), ``v`` the
target word's output vector, and ``n_i`` the output vectors of k noise
words drawn from the unigram distribution raised to the 3/4 power.

Training applies one SGD update per (center, context) pair, streaming the
corpus in document order with per-occurrence subsampling of frequent words,
a shrinking context window, and a linearly decaying learning rate. The
hot loop is compiled with numba; all randomness inside it comes from an
inline 64-bit linear congruential generator, so results are bit-identical
for a fixed seed on any platform, independent of BLAS threading.

`sgns_loss_and_gradient` is the plain-numpy statement of the objective and
its exact gradients; the test suite holds the compiled loop to it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .corpus import PAD_INDEX, UNK_INDEX, vocabulary_from_sequences
from .util import DataError, neg_log_sigmoid, sha256_hex, sigmoid, spawn_rng

MODES = ("skip", "cbow")

_BINARY_MAGIC = b"RCEMB 1\n"
_NOISE_TABLE_SIZE = 1_000_000


@dataclass
class W2vConfig:
    mode: str = "skip"
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float | None = None  # default 0.025 for skip, 0.05 for cbow
    subsample_threshold: float = 1e-4
    min_count: int = 5
    seed: int = 1

    def resolved_lr(self) -> float:
        if self.initial_lr is not None:
            return self.initial_lr
        return 0.025 if self.mode == "skip" else 0.05

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise ValueError("dim, window, negatives, and epochs must all be >= 1")


@dataclass
class EmbeddingTable:
    """Learned word vectors: one input and one output row per vocabulary token.

    Rows are float32 (as stored by the binary format); the padding row is
    all zeros. ``vocab_hash`` ties the table to the vocabulary it was
    trained over.
    """

    input_vectors: np.ndarray
    output_vectors: np.ndarray
    tokens: list[str]
    vocab_hash: str

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __post_init__(self):
        self._index = {tok: i for i, tok in enumerate(self.tokens)}

    def index_of(self, token: str) -> int | None:
        return self._index.get(token)

    def vector(self, token: str) -> np.ndarray:
        i = self._index.get(token)
        if i is None:
            raise KeyError(f"token {token!r} not in embedding vocabulary")
        return self.input_vectors[i]

    def content_hash(self) -> str:
        return sha256_hex(
            self.vocab_hash.encode()
            + self.input_vectors.astype("<f4").tobytes()
            + self.output_vectors.astype("<f4").tobytes()
        )

    # -- persistence --------------------------------------------------

    def save_binary(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = json.dumps({"count": len(self.tokens), "dim": self.dim, "tokens": self.tokens})
        with path.open("wb") as fh:
            fh.write(_BINARY_MAGIC)
            fh.write(header.encode("utf-8") + b"\n")
            fh.write(self.input_vectors.astype("<f4").tobytes())
            fh.write(self.output_vectors.astype("<f4").tobytes())

    @classmethod
    def load_binary(cls, path: str | Path) -> "EmbeddingTable":
        path = Path(path)
        if not path.exists():
            raise DataError(f"embedding file not found: {path}")
        with path.open("rb") as fh:
            magic = fh.read(len(_BINARY_MAGIC))
            if magic != _BINARY_MAGIC:
                raise DataError(f"{path}: not a binary embedding file")
            header = json.loads(fh.readline().decode("utf-8"))
            count, dim = header["count"], header["dim"]
            inp = np.frombuffer(fh.read(count * dim * 4), dtype="<f4").reshape(count, dim).copy()
            out = np.frombuffer(fh.read(count * dim * 4), dtype="<f4").reshape(count, dim).copy()
        tokens = header["tokens"]
        return cls(input_vectors=inp, output_vectors=out, tokens=tokens, vocab_hash=_hash_tokens(tokens))

    def save_text(self, path: str | Path) -> None:
        """Plain-text format: header "V d", then one token and its input
        vector per line (the common interchange layout)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            fh.write(f"{len(self.tokens)} {self.dim}\n")
            for tok, row in zip(self.tokens, self.input_vectors):
                comps = " ".join(format(float(x), ".9g") for x in row)
                fh.write(f"{tok} {comps}\n")

    @classmethod
    def load_text(cls, path: str | Path) -> "EmbeddingTable":
        path = Path(path)
        if not path.exists():
            raise DataError(f"embedding file not found: {path}")
        with path.open("r", encoding="utf-8") as fh:
            first = fh.readline().split()
            count, dim = int(first[0]), int(first[1])
            tokens, rows = [], []
            for line in fh:
                parts = line.rstrip("\n").split(" ")
                tokens.append(parts[0])
                rows.append(np.asarray(parts[1:], dtype=np.float32))
        if len(tokens) != count:
            raise DataError(f"{path}: header promises {count} rows, found {len(tokens)}")
        inp = np.vstack(rows)
        return cls(
            input_vectors=inp,
            output_vectors=np.zeros_like(inp),
            tokens=tokens,
            vocab_hash=_hash_tokens(tokens),
        )


def _hash_tokens(tokens: list[str]) -> str:
    return sha256_hex("\n".join(tokens).encode("utf-8"))


def sgns_loss_and_gradient(
    u: np.ndarray, v: np.ndarray, negatives: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Loss and exact gradients of one negative-sampling step.

    ``u`` is the prediction vector, ``v`` the positive target's output
    vector, ``negatives`` a (k, dim) matrix of noise output vectors.
    Returns (loss, dloss/du, dloss/dv, dloss/dnegatives).
    """
    pos_dot = float(u @ v)
    neg_dots = negatives @ u
    loss = float(neg_log_sigmoid(pos_dot) + neg_log_sigmoid(-neg_dots).sum())
    g_pos = sigmoid(pos_dot) - 1.0
    g_negs = sigmoid(neg_dots)
    grad_u = g_pos * v + g_negs @ negatives
    grad_v = g_pos * u
    grad_negs = np.outer(g_negs, u)
    return loss, grad_u, grad_v, grad_negs


def build_noise_table(frequencies: np.ndarray, size: int = _NOISE_TABLE_SIZE) -> np.ndarray:
    """Sampling table for the unigram^(3/4) noise distribution."""
    weights = np.asarray(frequencies, dtype=np.float64) ** 0.75
    if weights.sum() == 0:
        raise ValueError("no tokens with positive frequency")
    bounds = np.cumsum(weights) / weights.sum()
    return np.searchsorted(bounds, (np.arange(size) + 0.5) / size, side="right").astype(np.int32)


def train_embeddings(
    token_sequences: list[list[str]], config: W2vConfig
) -> tuple[EmbeddingTable, list[float]]:
    """Train an embedding table; returns (table, mean pair loss per epoch)."""
    config.validate()
    vocab = vocabulary_from_sequences(token_sequences, config.min_count)
    if len(vocab) <= 2:
        raise ValueError(f"corpus is empty after min_count={config.min_count} filtering")
    flat_parts, offsets = [], [0]
    for tokens in token_sequences:
        idx = [vocab.token_to_index[t] for t in tokens if t in vocab.token_to_index]
        if idx:
            flat_parts.extend(idx)
            offsets.append(len(flat_parts))
    if len(offsets) == 1:
        raise ValueError("no usable documents after vocabulary filtering")
    flat = np.asarray(flat_parts, dtype=np.int32)
    offsets = np.asarray(offsets, dtype=np.int64)

    freq = np.asarray(vocab.frequency, dtype=np.float64)
    total_tokens = float(freq.sum())
    rel = np.where(freq > 0, freq / total_tokens, 1.0)
    t = config.subsample_threshold
    keep_prob = np.minimum(1.0, np.sqrt(t / rel) + t / rel)
    noise_table = build_noise_table(freq)

    rng = spawn_rng(config.seed, "w2v-init", config.mode, config.dim)
    input_vecs = (rng.random((len(vocab), config.dim)) - 0.5) / config.dim
    input_vecs[PAD_INDEX] = 0.0
    input_vecs[UNK_INDEX] = 0.0
    output_vecs = np.zeros((len(vocab), config.dim))

    initial_lr = config.resolved_lr()
    schedule_total = float(config.epochs * flat.size + 1)
    state = np.uint64(spawn_rng(config.seed, "w2v-stream", config.mode, config.dim).integers(1, 2**63))
    kernel = _epoch_skip if config.mode == "skip" else _epoch_cbow
    processed = 0
    epoch_losses = []
    for _ in range(config.epochs):
        loss_sum, pairs, processed, state_out = kernel(
            flat,
            offsets,
            input_vecs,
            output_vecs,
            keep_prob,
            noise_table,
            config.window,
            config.negatives,
            initial_lr,
            processed,
            schedule_total,
            state,
        )
        state = np.uint64(state_out)  # may exceed int64 range as a plain int
        epoch_losses.append(loss_sum / max(1, pairs))

    table = EmbeddingTable(
        input_vectors=input_vecs.astype(np.float32),
        output_vectors=output_vecs.astype(np.float32),
        tokens=list(vocab.index_to_token),
        vocab_hash=vocab.hash(),
    )
    return table, epoch_losses


_LCG_MULT = np.uint64(25214903917)
_LCG_INC = np.uint64(11)
_MASK16 = np.uint64(0xFFFF)


@numba.njit(cache=True, fastmath=False)
def _neg_log_sigmoid_scalar(x):
    if x >= 0.0:
        return math.log1p(math.exp(-x))
    return -x + math.log1p(math.exp(x))


@numba.njit(cache=True, fastmath=False)
def _sigmoid_scalar(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


@numba.njit(cache=True, fastmath=False)
def _subsample(flat, start, end, keep_prob, state, sen):
    slen = 0
    for pos in range(start, end):
        w = flat[pos]
        state = state * _LCG_MULT + _LCG_INC
        u = np.float64(state & _MASK16) / 65536.0
        if u < keep_prob[w]:
            sen[slen] = w
            slen += 1
    return slen, state


@numba.njit(cache=True, fastmath=False)
def _pair_step(pred_row, target, out, neg_table, k, lr, state, neu1e):
    """One positive target plus k negatives against a prediction vector.

    Accumulates the prediction-side gradient into ``neu1e`` (caller applies
    it) and updates the output rows in place. Returns (loss, state).
    """
    dim = pred_row.shape[0]
    loss = 0.0
    for s in range(k + 1):
        if s == 0:
            tgt = target
            label = 1.0
        else:
            state = state * _LCG_MULT + _LCG_INC
            tgt = neg_table[np.int64((state >> np.uint64(16)) % np.uint64(neg_table.shape[0]))]
            if tgt == target:
                continue
            label = 0.0
        dot = 0.0
        for c in range(dim):
            dot += pred_row[c] * out[tgt, c]
        if label == 1.0:
            loss += _neg_log_sigmoid_scalar(dot)
        else:
            loss += _neg_log_sigmoid_scalar(-dot)
        g = (_sigmoid_scalar(dot) - label) * lr
        for c in range(dim):
            neu1e[c] += g * out[tgt, c]
            out[tgt, c] -= g * pred_row[c]
    return loss, state


@numba.njit(cache=True, fastmath=False)
def _epoch_skip(flat, offsets, inp, out, keep_prob, neg_table, window, k, initial_lr, processed, schedule_total, state):
    dim = inp.shape[1]
    loss_sum = 0.0
    pair_count = 0
    sen = np.empty(flat.shape[0], dtype=np.int32)
    neu1e = np.empty(dim, dtype=np.float64)
    for d in range(offsets.shape[0] - 1):
        slen, state = _subsample(flat, offsets[d], offsets[d + 1], keep_prob, state, sen)
        processed += offsets[d + 1] - offsets[d]
        frac = 1.0 - processed / schedule_total
        if frac < 1e-4:
            frac = 1e-4
        lr = initial_lr * frac
        for i in range(slen):
            center = sen[i]
            state = state * _LCG_MULT + _LCG_INC
            win = window - np.int64(state % np.uint64(window))
            lo = i - win if i - win > 0 else 0
            hi = i + win + 1 if i + win + 1 < slen else slen
            for j in range(lo, hi):
                if j == i:
                    continue
                ctx = sen[j]
                for c in range(dim):
                    neu1e[c] = 0.0
                loss, state = _pair_step(inp[ctx], center, out, neg_table, k, lr, state, neu1e)
                for c in range(dim):
                    inp[ctx, c] -= neu1e[c]
                loss_sum += loss
                pair_count += 1
    return loss_sum, pair_count, processed, state


@numba.njit(cache=True, fastmath=False)
def _epoch_cbow(flat, offsets, inp, out, keep_prob, neg_table, window, k, initial_lr, processed, schedule_total, state):
    dim = inp.shape[1]
    loss_sum = 0.0
    pair_count = 0
    sen = np.empty(flat.shape[0], dtype=np.int32)
    neu1 = np.empty(dim, dtype=np.float64)
    neu1e = np.empty(dim, dtype=np.float64)
    for d in range(offsets.shape[0] - 1):
        slen, state = _subsample(flat, offsets[d], offsets[d + 1], keep_prob, state, sen)
        processed += offsets[d + 1] - offsets[d]
        frac = 1.0 - processed / schedule_total
        if frac < 1e-4:
            frac = 1e-4
        lr = initial_lr * frac
        for i in range(slen):
            center = sen[i]
            state = state * _LCG_MULT + _LCG_INC
            win = window - np.int64(state % np.uint64(window))
            lo = i - win if i - win > 0 else 0
            hi = i + win + 1 if i + win + 1 < slen else slen
            count = hi - lo - 1
            if count < 1:
                continue
            for c in range(dim):
                neu1[c] = 0.0
                neu1e[c] = 0.0
            for j in range(lo, hi):
                if j == i:
                    continue
                ctx = sen[j]
                for c in range(dim):
                    neu1[c] += inp[ctx, c]
            for c in range(dim):
                neu1[c] /= count
            loss, state = _pair_step(neu1, center, out, neg_table, k, lr, state, neu1e)
            # exact gradient of the mean combiner: each context row gets 1/count
            for j in range(lo, hi):
                if j == i:
                    continue
                ctx = sen[j]
                for c in range(dim):
                    inp[ctx, c] -= neu1e[c] / count
            loss_sum += loss
            pair_count += 1
    return loss_sum, pair_count, processed, state


def nearest_neighbors(table: EmbeddingTable, token: str, top_k: int) -> list[tuple[str, float]]:
    """Tokens ranked by cosine similarity of input vectors to the query.

    The query itself and the reserved padding/unknown rows are skipped.
    """
    q_idx = table.index_of(token)
    if q_idx is None:
        raise ValueError(f"token {token!r} not in embedding vocabulary")
    if top_k <= 0:
        return []
    vecs = table.input_vectors.astype(np.float64)
    query = vecs[q_idx]
    norms = np.linalg.norm(vecs, axis=1)
    qn = np.linalg.norm(query)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = (vecs @ query) / (norms * qn)
    cos = np.nan_to_num(cos, nan=0.0)
    cos[q_idx] = -np.inf
    cos[[PAD_INDEX, UNK_INDEX]] = -np.inf
    order = np.argsort(-cos, kind="stable")[:top_k]
    return [(table.tokens[i], float(cos[i])) for i in order if np.isfinite(cos[i])]
