"""Corpus handling: tokenization, vocabulary, padding, and stratified splits.

Documents carry one severity label in {0, 1, 2} per task (tasks are numbered
1..5 by default). Corpora are stored as UTF-8 JSON Lines, one object per
line: ``{"id": ..., "text": ..., "labels": {"task1": 0, ...}}``; the
``labels`` field is optional for unlabeled corpora used only for embedding
training.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .util import DataError, sha256_hex, spawn_rng

PAD_INDEX = 0
UNK_INDEX = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


@dataclass
class Document:
    id: str
    tokens: list[str]
    labels: dict[int, int] = field(default_factory=dict)
    raw_text: str = ""

    def __post_init__(self):
        for task, lab in self.labels.items():
            if lab not in (0, 1, 2):
                raise ValueError(f"document {self.id}: label {lab} for task {task} not in {{0,1,2}}")


def tokenize(raw_text: str) -> list[str]:
    """Lowercase, split on whitespace, detach punctuation, split internal hyphens.

    Alphanumeric tokens such as ``3mm`` are kept whole. Deterministic, and
    idempotent under re-tokenizing the space-joined output.
    """
    tokens: list[str] = []
    for chunk in raw_text.lower().split():
        tokens.extend(_split_chunk(chunk))
    return tokens


def _split_chunk(chunk: str) -> list[str]:
    out: list[str] = []
    i, j = 0, len(chunk)
    while i < j and not chunk[i].isalnum():
        out.append(chunk[i])
        i += 1
    trailing: list[str] = []
    while j > i and not chunk[j - 1].isalnum():
        trailing.append(chunk[j - 1])
        j -= 1
    core = chunk[i:j]
    if core:
        for k, part in enumerate(core.split("-")):
            if k:
                out.append("-")
            if part:
                out.append(part)
    out.extend(reversed(trailing))
    return out


@dataclass
class Vocabulary:
    """Bidirectional token<->index map with corpus frequencies.

    Indices 0 and 1 are reserved for padding and unknown tokens; real tokens
    start at index 2, ordered by descending corpus frequency with lexicographic
    tie-breaking.
    """

    token_to_index: dict[str, int]
    index_to_token: list[str]
    frequency: list[int]

    def __len__(self) -> int:
        return len(self.index_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_index.get(token, UNK_INDEX)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def hash(self) -> str:
        return sha256_hex("\n".join(self.index_to_token).encode("utf-8"))

    def to_json(self) -> dict:
        return {"tokens": self.index_to_token[2:], "frequency": self.frequency[2:]}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        vocab = cls(
            token_to_index={PAD_TOKEN: PAD_INDEX, UNK_TOKEN: UNK_INDEX},
            index_to_token=[PAD_TOKEN, UNK_TOKEN],
            frequency=[0, 0],
        )
        for token, freq in zip(obj["tokens"], obj["frequency"]):
            vocab.token_to_index[token] = len(vocab.index_to_token)
            vocab.index_to_token.append(token)
            vocab.frequency.append(int(freq))
        return vocab


def build_vocabulary(docs, min_count: int = 1) -> Vocabulary:
    """Vocabulary of all tokens with corpus frequency >= min_count."""
    return vocabulary_from_sequences((doc.tokens for doc in docs), min_count)


def vocabulary_from_sequences(token_sequences, min_count: int = 1) -> Vocabulary:
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    for tokens in token_sequences:
        counts.update(tokens)
    counts.pop(PAD_TOKEN, None)
    counts.pop(UNK_TOKEN, None)
    kept = sorted(
        ((tok, c) for tok, c in counts.items() if c >= min_count),
        key=lambda item: (-item[1], item[0]),
    )
    vocab = Vocabulary(
        token_to_index={PAD_TOKEN: PAD_INDEX, UNK_TOKEN: UNK_INDEX},
        index_to_token=[PAD_TOKEN, UNK_TOKEN],
        frequency=[0, 0],
    )
    for tok, c in kept:
        vocab.token_to_index[tok] = len(vocab.index_to_token)
        vocab.index_to_token.append(tok)
        vocab.frequency.append(c)
    return vocab


@dataclass
class PaddedDocument:
    """Fixed-length index view of a document: truncated to the first
    ``length`` tokens, right-padded with the PAD index."""

    indices: np.ndarray
    length: int

    @property
    def num_real(self) -> int:
        nz = np.nonzero(self.indices == PAD_INDEX)[0]
        return int(nz[0]) if nz.size else self.length


def pad_document(doc: Document, vocab: Vocabulary, length: int) -> PaddedDocument:
    if length < 1:
        raise ValueError("padded length must be >= 1")
    idx = np.full(length, PAD_INDEX, dtype=np.int32)
    for i, tok in enumerate(doc.tokens[:length]):
        idx[i] = vocab.lookup(tok)
    return PaddedDocument(indices=idx, length=length)


@dataclass
class CorpusSplit:
    train: list[Document]
    dev: list[Document]
    test: list[Document]

    def as_dict(self) -> dict[str, list[Document]]:
        return {"train": self.train, "dev": self.dev, "test": self.test}


def stratified_split(docs: list[Document], task: int, sizes: tuple[int, int, int], seed: int) -> CorpusSplit:
    """Split docs into train/dev/test with per-label proportionality.

    Each label's allocation follows a largest-remainder rounding of
    ``size * label_count / len(docs)`` subject to exact split sizes, so every
    split's per-label count lands within one document of its quota.
    Deterministic for a fixed seed.
    """
    if sum(sizes) > len(docs):
        raise ValueError(f"split sizes {sizes} exceed corpus size {len(docs)}")
    by_label: dict[int, list[Document]] = {}
    for doc in docs:
        if task not in doc.labels:
            raise DataError(f"document {doc.id} has no label for task {task}")
        by_label.setdefault(doc.labels[task], []).append(doc)
    for lab, members in sorted(by_label.items()):
        if len(members) < len(sizes):
            raise ValueError(f"label {lab} has only {len(members)} documents for {len(sizes)} splits")

    total = len(docs)
    labels = sorted(by_label)
    quotas = {(s, lab): sizes[s] * len(by_label[lab]) / total for s in range(len(sizes)) for lab in labels}
    alloc = {cell: math.floor(q) for cell, q in quotas.items()}
    capacity = [sizes[s] - sum(alloc[(s, lab)] for lab in labels) for s in range(len(sizes))]
    remaining = {lab: len(by_label[lab]) - sum(alloc[(s, lab)] for s in range(len(sizes))) for lab in labels}
    # hand out the leftover seats by descending fractional part, respecting
    # split capacity and per-label supply
    order = sorted(quotas, key=lambda cell: (-(quotas[cell] - math.floor(quotas[cell])), cell))
    for s, lab in order:
        if capacity[s] > 0 and remaining[lab] > 0:
            alloc[(s, lab)] += 1
            capacity[s] -= 1
            remaining[lab] -= 1

    rng = spawn_rng(seed, "stratified-split", task)
    parts: list[list[Document]] = [[], [], []]
    for lab in labels:
        members = list(by_label[lab])
        perm = rng.permutation(len(members))
        shuffled = [members[i] for i in perm]
        pos = 0
        for s in range(len(sizes)):
            take = alloc[(s, lab)]
            parts[s].extend(shuffled[pos : pos + take])
            pos += take
    rng2 = spawn_rng(seed, "stratified-order", task)
    for part in parts:
        perm = rng2.permutation(len(part))
        part[:] = [part[i] for i in perm]
    return CorpusSplit(train=parts[0], dev=parts[1], test=parts[2])


def subsample_stratified(docs: list[Document], task: int, size: int, seed: int) -> list[Document]:
    """Label-proportional subset of ``docs``, used for training-size sweeps."""
    if size >= len(docs):
        return list(docs)
    split = stratified_split(docs, task, (size, 0, 0), seed)
    return split.train


# --- JSON Lines corpus I/O ------------------------------------------------


def _labels_to_json(labels: dict[int, int]) -> dict[str, int]:
    return {f"task{task}": lab for task, lab in sorted(labels.items())}


def _labels_from_json(obj: dict) -> dict[int, int]:
    labels = {}
    for key, lab in obj.items():
        if not key.startswith("task"):
            raise DataError(f"bad label key {key!r}")
        labels[int(key[4:])] = int(lab)
    return labels


def write_corpus(docs: list[Document], path: str | Path, include_labels: bool = True) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for doc in docs:
            obj: dict = {"id": doc.id, "text": doc.raw_text or " ".join(doc.tokens)}
            if include_labels and doc.labels:
                obj["labels"] = _labels_to_json(doc.labels)
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def read_corpus(path: str | Path) -> list[Document]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    docs = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if "id" not in obj or "text" not in obj:
                raise DataError(f"{path}:{lineno}: missing 'id' or 'text'")
            docs.append(
                Document(
                    id=str(obj["id"]),
                    tokens=tokenize(obj["text"]),
                    labels=_labels_from_json(obj.get("labels", {})),
                    raw_text=obj["text"],
                )
            )
    return docs


def write_split_manifest(split: CorpusSplit, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {name: [d.id for d in part] for name, part in split.as_dict().items()}
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")


def read_split_manifest(docs: list[Document], path: str | Path) -> CorpusSplit:
    path = Path(path)
    if not path.exists():
        raise DataError(f"split manifest not found: {path}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    by_id = {d.id: d for d in docs}
    parts = {}
    for name in ("train", "dev", "test"):
        try:
            parts[name] = [by_id[i] for i in manifest[name]]
        except KeyError as exc:
            raise DataError(f"manifest {path}: unknown document id {exc}") from exc
    return CorpusSplit(**parts)
