"""Embedding-attention pathway and per-token explanations.

The attention pathway turns a document matrix (one embedding row per token)
into a single vector in three steps: length-1 convolutions produce an
(n x m_a) attention matrix, row-wise max pooling reduces it to one raw
attention weight per token, and the transposed document matrix times that
weight vector yields the embedding attention vector (EAV) that joins the
pooled convolution features in front of the softmax layer.

Raw attention weights are not normalized inside the network; min-max
normalization over the real (non padding) tokens happens only when an
explanation is rendered. A constant weight vector normalizes to 0.5
everywhere to avoid dividing by zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cnn import CnnModel, forward_batch
from .corpus import Document, PaddedDocument, Vocabulary, pad_document
from .ops import apply_activation, rowwise_max


@dataclass
class AttentionConfig:
    num_filters: int = 10
    combine: str = "concat"  # the EAV is appended to the pooled features

    def validate(self) -> None:
        if self.num_filters < 1:
            raise ValueError("attention needs at least one filter")
        if self.combine != "concat":
            raise ValueError("only the additive (concatenation) combination is supported")


def attention_matrix(
    doc_matrix: np.ndarray, filters: np.ndarray, biases: np.ndarray, activation: str = "relu"
) -> np.ndarray:
    """Stack m_a length-1 convolutions into an (n x m_a) matrix.

    ``filters`` has shape (m_a, 1, dim): length-1 filters only.
    """
    filters = np.asarray(filters)
    if filters.ndim != 3 or filters.shape[1] != 1:
        raise ValueError(f"attention filters must have length 1, got shape {filters.shape}")
    if filters.shape[2] != doc_matrix.shape[1]:
        raise ValueError(f"filter width {filters.shape[2]} != document matrix width {doc_matrix.shape[1]}")
    out = doc_matrix @ filters[:, 0, :].T + np.asarray(biases)
    return apply_activation(out, activation)


def attention_vector(att_matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise max pooling of the attention matrix; returns the per-token
    weights and the winning filter per row (for gradient routing)."""
    return rowwise_max(att_matrix)


def embedding_attention_vector(doc_matrix: np.ndarray, att_vec: np.ndarray) -> np.ndarray:
    """Weighted sum of embedding rows: transpose(doc_matrix) @ att_vec."""
    if doc_matrix.shape[0] != att_vec.shape[0]:
        raise ValueError(f"document matrix has {doc_matrix.shape[0]} rows but attention vector {att_vec.shape[0]}")
    return doc_matrix.T @ att_vec


@dataclass
class AttentionExplanation:
    """Per-token attention for one document plus the EAV it induced."""

    doc_id: str
    task: int | None
    predicted_label: int
    token_surface: list[str]
    attention: np.ndarray  # raw per-token weights, length n
    eav: np.ndarray  # length dim
    normalized_weights: np.ndarray  # length n, PAD positions 0
    num_real: int

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "task": self.task,
            "predicted_label": self.predicted_label,
            "tokens": [
                {
                    "token": self.token_surface[i],
                    "weight_raw": float(self.attention[i]),
                    "weight_normalized": float(self.normalized_weights[i]),
                }
                for i in range(self.num_real)
            ],
        }


def normalized_attention(raw: np.ndarray, num_real: int) -> np.ndarray:
    """Min-max normalization over the real tokens; padding renders as 0 and
    a constant vector renders as 0.5."""
    out = np.zeros_like(raw, dtype=np.float64)
    if num_real == 0:
        return out
    real = raw[:num_real]
    lo, hi = float(real.min()), float(real.max())
    if hi - lo < 1e-12:
        out[:num_real] = 0.5
    else:
        out[:num_real] = (real - lo) / (hi - lo)
    return out


def nam_forward(
    model: CnnModel,
    padded: PaddedDocument,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
    surfaces: list[str] | None = None,
    doc_id: str = "",
    task: int | None = None,
) -> tuple[np.ndarray, AttentionExplanation]:
    """Forward pass returning logits plus the attention explanation."""
    if not model.has_attention:
        raise ValueError("model has no attention pathway")
    cache = forward_batch(model, padded.indices[None, :], mode=mode, rng=rng)
    logits = cache.logits[0]
    raw = cache.att_values[0]
    num_real = padded.num_real
    if surfaces is None:
        surfaces = ["" for _ in range(padded.length)]
    expl = AttentionExplanation(
        doc_id=doc_id,
        task=task,
        predicted_label=int(np.argmax(logits)),
        token_surface=surfaces,
        attention=raw,
        eav=cache.eav[0],
        normalized_weights=normalized_attention(raw, num_real),
        num_real=num_real,
    )
    return logits, expl


def explain(model: CnnModel, doc: Document, vocab: Vocabulary, task: int | None = None) -> AttentionExplanation:
    """Evaluation-mode attention explanation for one document."""
    padded = pad_document(doc, vocab, model.config.doc_length)
    surfaces = list(doc.tokens[: model.config.doc_length])
    surfaces += ["<pad>"] * (model.config.doc_length - len(surfaces))
    _, expl = nam_forward(model, padded, mode="eval", surfaces=surfaces, doc_id=doc.id, task=task)
    return expl
