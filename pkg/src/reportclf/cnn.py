"""Single-layer convolutional document classifier with an optional
embedding-attention pathway.

Forward pass per document: embedding lookup -> one convolution bank per
filter length -> ReLU -> max-over-time pooling (one feature per filter) ->
concatenation -> dropout -> softmax. With ``attention_filters > 0`` a second
pathway runs length-1 convolutions over the document matrix, max-pools each
row into a per-token attention weight, and folds the embedding rows into a
single attention-weighted vector that is concatenated to the pooled
features (an additive two-pathway network).

All gradients are computed by hand; `ops.check_gradients` verifies them.
Training is deterministic for a fixed seed: the epoch shuffle, dropout, and
initialization each draw from an independent stream derived from the seed.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import PAD_INDEX, PaddedDocument, Vocabulary
from .ops import dropout_mask, sliding_windows
from .util import spawn_rng
from .word2vec import EmbeddingTable


@dataclass
class CnnConfig:
    filter_lengths: tuple[int, ...] = (2, 3, 4, 5)
    num_filters: int = 64
    attention_filters: int = 0  # 0 = plain CNN, >0 = attention pathway width
    dropout_rate: float = 0.2
    doc_length: int = 800
    num_classes: int = 3
    epochs: int = 20
    # adam handles the poorly conditioned two-pathway curvature; plain sgd
    # needs several times more epochs and can starve or blow up the
    # attention pathway
    optimizer: str = "adam"
    lr: float = 1e-3
    batch_size: int = 16
    clip_norm: float = 5.0
    seed: int = 1
    embedding_mode: str = "static"  # "static" | "fine-tune"
    activation: str = "relu"  # "relu" | "identity"
    # None mirrors `activation`; identity keeps the attention pathway from
    # dying (a ReLU pathway whose pre-activations all go negative stops
    # learning and its per-token weights collapse to a constant)
    attention_activation: str | None = None
    early_stop_patience: int = 5
    class_weights: tuple[float, ...] | None = None

    def validate(self) -> None:
        if self.num_filters < 1:
            raise ValueError("num_filters must be >= 1")
        if any(l < 1 or l > self.doc_length for l in self.filter_lengths):
            raise ValueError(f"filter lengths {self.filter_lengths} must lie in [1, doc_length={self.doc_length}]")
        if self.embedding_mode not in ("static", "fine-tune"):
            raise ValueError(f"unknown embedding_mode {self.embedding_mode!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")

    @property
    def pooled_dim(self) -> int:
        return len(self.filter_lengths) * self.num_filters

    @property
    def resolved_attention_activation(self) -> str:
        return self.activation if self.attention_activation is None else self.attention_activation

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["filter_lengths"] = list(self.filter_lengths)
        if self.class_weights is not None:
            obj["class_weights"] = list(self.class_weights)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "CnnConfig":
        obj = dict(obj)
        obj["filter_lengths"] = tuple(obj["filter_lengths"])
        if obj.get("class_weights") is not None:
            obj["class_weights"] = tuple(obj["class_weights"])
        return cls(**obj)


@dataclass
class CnnModel:
    config: CnnConfig
    params: dict[str, np.ndarray]
    embedding: np.ndarray  # (vocab, dim) float64; a parameter only when fine-tuning
    vocab_hash: str
    embedding_hash: str

    @property
    def dim(self) -> int:
        return self.embedding.shape[1]

    @property
    def has_attention(self) -> bool:
        return self.config.attention_filters > 0

    def clone_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}


def build_embedding_matrix(vocab: Vocabulary, table: EmbeddingTable, seed_salt: str = "oov-embedding") -> np.ndarray:
    """Document-matrix rows for a classification vocabulary.

    The padding row is all zeros. Tokens missing from the embedding table
    get a deterministic uniform row in [-0.5/dim, 0.5/dim] derived from the
    token string, so the matrix does not depend on vocabulary order or run.
    """
    dim = table.dim
    mat = np.zeros((len(vocab), dim))
    for i, tok in enumerate(vocab.index_to_token):
        if i == PAD_INDEX:
            continue
        j = table.index_of(tok)
        if j is not None:
            mat[i] = table.input_vectors[j].astype(np.float64)
        else:
            mat[i] = (spawn_rng(seed_salt, tok).random(dim) - 0.5) / dim
    return mat


def initialize_model(config: CnnConfig, vocab: Vocabulary, table: EmbeddingTable) -> CnnModel:
    config.validate()
    emb = build_embedding_matrix(vocab, table)
    dim = emb.shape[1]
    rng = spawn_rng(config.seed, "cnn-init")
    params: dict[str, np.ndarray] = {}
    for l in config.filter_lengths:
        params[f"conv_w{l}"] = (rng.random((config.num_filters, l * dim)) - 0.5) * 0.1
        params[f"conv_b{l}"] = np.zeros(config.num_filters)
    if config.attention_filters > 0:
        params["att_w"] = (rng.random((config.attention_filters, dim)) - 0.5) * 0.1
        params["att_b"] = np.zeros(config.attention_filters)
        params["softmax_w_att"] = np.zeros((config.num_classes, dim))
    params["softmax_w_pool"] = np.zeros((config.num_classes, config.pooled_dim))
    params["softmax_b"] = np.zeros(config.num_classes)
    if config.embedding_mode == "fine-tune":
        params["embedding"] = emb  # shared reference: updates flow into lookups
    return CnnModel(
        config=config,
        params=params,
        embedding=emb,
        vocab_hash=vocab.hash(),
        embedding_hash=table.content_hash(),
    )


@dataclass
class ForwardCache:
    """Intermediate values one batch's backward pass needs."""

    indices: np.ndarray  # (B, n)
    emb: np.ndarray  # (B, n, dim)
    windows: dict[int, np.ndarray]  # l -> (B, n-l+1, l*dim)
    pooled: np.ndarray  # (B, F) post-activation maxima
    argmax: dict[int, np.ndarray]  # l -> (B, m)
    att_values: np.ndarray | None  # (B, n) row maxima of the attention matrix
    att_argmax: np.ndarray | None  # (B, n) winning attention filter per row
    eav: np.ndarray | None  # (B, dim)
    mask: np.ndarray | None  # dropout mask over concatenated features
    logits: np.ndarray  # (B, C)


def _activation_forward(x: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(x, 0.0) if kind == "relu" else x


def forward_batch(
    model: CnnModel,
    indices: np.ndarray,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> ForwardCache:
    cfg = model.config
    if indices.ndim == 1:
        indices = indices[None, :]
    if indices.shape[1] != cfg.doc_length:
        raise ValueError(f"document length {indices.shape[1]} != configured {cfg.doc_length}")
    if indices.max() >= model.embedding.shape[0]:
        raise ValueError("document indices exceed the model vocabulary")
    B = indices.shape[0]
    emb = model.embedding[indices]  # (B, n, dim)

    pooled_parts, argmax, windows = [], {}, {}
    for l in cfg.filter_lengths:
        win = np.lib.stride_tricks.sliding_window_view(emb, (l, model.dim), axis=(1, 2))
        win = win.reshape(B, cfg.doc_length - l + 1, l * model.dim)
        conv = win @ model.params[f"conv_w{l}"].T + model.params[f"conv_b{l}"]
        conv = _activation_forward(conv, cfg.activation)
        arg = np.argmax(conv, axis=1)  # (B, m)
        pooled_parts.append(np.take_along_axis(conv, arg[:, None, :], axis=1)[:, 0, :])
        argmax[l] = arg
        windows[l] = win
    pooled = np.concatenate(pooled_parts, axis=1)  # (B, F)

    att_values = att_argmax = eav = None
    if model.has_attention:
        att = emb @ model.params["att_w"].T + model.params["att_b"]  # (B, n, m_a)
        att = _activation_forward(att, cfg.resolved_attention_activation)
        att_argmax = np.argmax(att, axis=2)  # (B, n)
        att_values = np.take_along_axis(att, att_argmax[:, :, None], axis=2)[:, :, 0]
        eav = np.einsum("bnd,bn->bd", emb, att_values)

    mask = None
    feat_pool, feat_att = pooled, eav
    if mode == "train" and cfg.dropout_rate > 0.0:
        if rng is None:
            raise ValueError("train-mode forward needs an rng for dropout")
        width = cfg.pooled_dim + (model.dim if model.has_attention else 0)
        mask = dropout_mask((B, width), cfg.dropout_rate, rng)
        feat_pool = pooled * mask[:, : cfg.pooled_dim]
        if model.has_attention:
            feat_att = eav * mask[:, cfg.pooled_dim :]

    # the two pathways stay separate so that a zero attention pathway adds
    # exact zeros to the plain-CNN logits
    logits = feat_pool @ model.params["softmax_w_pool"].T + model.params["softmax_b"]
    if model.has_attention:
        logits = logits + feat_att @ model.params["softmax_w_att"].T

    return ForwardCache(
        indices=indices,
        emb=emb,
        windows=windows,
        pooled=pooled,
        argmax=argmax,
        att_values=att_values,
        att_argmax=att_argmax,
        eav=eav,
        mask=mask,
        logits=logits,
    )


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=1, keepdims=True)


def loss_and_grads(model: CnnModel, cache: ForwardCache, gold: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean softmax cross-entropy over the batch plus parameter gradients."""
    cfg = model.config
    B = cache.logits.shape[0]
    probs = _softmax_rows(cache.logits)
    shifted = cache.logits - cache.logits.max(axis=1, keepdims=True)
    logexp = np.log(np.exp(shifted).sum(axis=1))
    per_doc = logexp - shifted[np.arange(B), gold]
    if cfg.class_weights is not None:
        w = np.asarray(cfg.class_weights)[gold]
    else:
        w = np.ones(B)
    loss = float((per_doc * w).sum() / B)

    dlogits = probs.copy()
    dlogits[np.arange(B), gold] -= 1.0
    dlogits *= (w / B)[:, None]

    grads: dict[str, np.ndarray] = {}
    fine_tune = cfg.embedding_mode == "fine-tune"
    demb = np.zeros_like(cache.emb) if fine_tune else None

    feat_pool = cache.pooled if cache.mask is None else cache.pooled * cache.mask[:, : cfg.pooled_dim]
    grads["softmax_w_pool"] = dlogits.T @ feat_pool
    grads["softmax_b"] = dlogits.sum(axis=0)
    dpooled = dlogits @ model.params["softmax_w_pool"]
    if cache.mask is not None:
        dpooled = dpooled * cache.mask[:, : cfg.pooled_dim]

    if model.has_attention:
        feat_att = cache.eav if cache.mask is None else cache.eav * cache.mask[:, cfg.pooled_dim :]
        grads["softmax_w_att"] = dlogits.T @ feat_att
        deav = dlogits @ model.params["softmax_w_att"]
        if cache.mask is not None:
            deav = deav * cache.mask[:, cfg.pooled_dim :]
        datt_values = np.einsum("bnd,bd->bn", cache.emb, deav)
        if fine_tune:
            demb += cache.att_values[:, :, None] * deav[:, None, :]
        if cfg.resolved_attention_activation == "relu":
            datt_values = datt_values * (cache.att_values > 0.0)
        m_a = cfg.attention_filters
        datt_w = np.zeros_like(model.params["att_w"])
        datt_b = np.zeros_like(model.params["att_b"])
        for c in range(m_a):
            sel = (cache.att_argmax == c) * datt_values  # (B, n)
            datt_w[c] = np.einsum("bn,bnd->d", sel, cache.emb)
            datt_b[c] = sel.sum()
        grads["att_w"] = datt_w
        grads["att_b"] = datt_b
        if fine_tune:
            demb += datt_values[:, :, None] * model.params["att_w"][cache.att_argmax]

    offset = 0
    for l in cfg.filter_lengths:
        m = cfg.num_filters
        dpool_l = dpooled[:, offset : offset + m]  # (B, m)
        offset += m
        pooled_l = cache.pooled[:, offset - m : offset]
        if cfg.activation == "relu":
            dpool_l = dpool_l * (pooled_l > 0.0)
        arg = cache.argmax[l]  # (B, m)
        win = np.take_along_axis(cache.windows[l], arg[:, :, None], axis=1)  # (B, m, l*dim)
        grads[f"conv_w{l}"] = np.einsum("bm,bmk->mk", dpool_l, win)
        grads[f"conv_b{l}"] = dpool_l.sum(axis=0)
        if fine_tune:
            contrib = dpool_l[:, :, None] * model.params[f"conv_w{l}"][None, :, :]  # (B, m, l*dim)
            contrib = contrib.reshape(B, m, l, model.dim)
            b_idx = np.arange(B)[:, None]
            for t in range(l):
                np.add.at(demb, (b_idx, arg + t), contrib[:, :, t, :])

    if fine_tune:
        dE = np.zeros_like(model.params["embedding"])
        np.add.at(dE, cache.indices.reshape(-1), demb.reshape(-1, model.dim))
        dE[PAD_INDEX] = 0.0  # padding row is frozen
        grads["embedding"] = dE

    return loss, grads


def predict_batch(model: CnnModel, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cache = forward_batch(model, indices, mode="eval")
    probs = _softmax_rows(cache.logits)
    return np.argmax(probs, axis=1), probs


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    dev_acc: float

    def to_json(self) -> dict:
        return {"epoch": self.epoch, "train_loss": self.train_loss, "train_acc": self.train_acc, "dev_acc": self.dev_acc}


def train(
    model: CnnModel,
    train_docs: np.ndarray,
    train_labels: np.ndarray,
    dev_docs: np.ndarray,
    dev_labels: np.ndarray,
) -> list[EpochMetrics]:
    """SGD with gradient clipping; keeps the epoch snapshot with the best
    dev accuracy (earlier epoch on ties). Mutates ``model`` in place and
    returns per-epoch metrics."""
    cfg = model.config
    if train_docs.shape[0] == 0 or dev_docs.shape[0] == 0:
        raise ValueError("train and dev sets must be non-empty")
    drop_rng = spawn_rng(cfg.seed, "cnn-dropout")
    best_params = model.clone_params()
    best_emb = model.embedding.copy() if cfg.embedding_mode == "fine-tune" else None
    best_acc = -1.0
    stagnant = 0
    metrics: list[EpochMetrics] = []
    from .ops import AdamState, clip_global_norm, sgd_step

    adam = AdamState(model.params) if cfg.optimizer == "adam" else None
    for epoch in range(cfg.epochs):
        perm = spawn_rng(cfg.seed, "cnn-shuffle", epoch).permutation(train_docs.shape[0])
        loss_sum, correct, seen = 0.0, 0, 0
        for start in range(0, len(perm), cfg.batch_size):
            sel = perm[start : start + cfg.batch_size]
            cache = forward_batch(model, train_docs[sel], mode="train", rng=drop_rng)
            loss, grads = loss_and_grads(model, cache, train_labels[sel])
            if not np.isfinite(loss):
                raise RuntimeError(f"training diverged (non-finite loss) at epoch {epoch}")
            loss_sum += loss * len(sel)
            correct += int((np.argmax(cache.logits, axis=1) == train_labels[sel]).sum())
            seen += len(sel)
            grads = clip_global_norm(grads, cfg.clip_norm)
            if adam is not None:
                adam.step(model.params, grads, cfg.lr)
            else:
                for name, g in grads.items():
                    model.params[name][...] = sgd_step(model.params[name], g, cfg.lr)
        dev_acc, _ = evaluate(model, dev_docs, dev_labels)
        metrics.append(
            EpochMetrics(epoch=epoch, train_loss=loss_sum / seen, train_acc=correct / seen, dev_acc=dev_acc)
        )
        if dev_acc > best_acc:
            best_acc = dev_acc
            best_params = model.clone_params()
            best_emb = model.embedding.copy() if cfg.embedding_mode == "fine-tune" else None
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= cfg.early_stop_patience:
                break
    model.params = best_params
    if cfg.embedding_mode == "fine-tune":
        model.embedding = best_emb
        model.params["embedding"] = model.embedding
    return metrics


def evaluate(model: CnnModel, docs: np.ndarray, labels: np.ndarray, chunk: int = 64) -> tuple[float, np.ndarray]:
    """Accuracy and a confusion matrix (rows gold, columns predicted)."""
    if docs.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty document set")
    C = model.config.num_classes
    confusion = np.zeros((C, C), dtype=np.int64)
    for start in range(0, docs.shape[0], chunk):
        preds, _ = predict_batch(model, docs[start : start + chunk])
        for g, p in zip(labels[start : start + chunk], preds):
            confusion[int(g), int(p)] += 1
    acc = float(np.trace(confusion) / confusion.sum())
    return acc, confusion


def stack_padded(padded: list[PaddedDocument]) -> np.ndarray:
    return np.stack([p.indices for p in padded]).astype(np.int64)
