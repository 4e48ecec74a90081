"""Bag-of-words vector representations.

Four weighting schemes over a shared vocabulary:

* ``tf``       raw term counts
* ``tf_norm``  counts divided by the document's retained token count
* ``binary``   0/1 presence indicators
* ``tfidf``    raw count times ln(num_docs / doc_frequency)

Stopwords are removed for the first three schemes but not for tf-idf, whose
document-frequency factor already down-weights ubiquitous words. The bundled
stopword list lives in ``data/stopwords.txt`` and can be swapped out by
passing any other set of strings.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

from .corpus import Document, Vocabulary

SCHEMES = ("tf", "tf_norm", "binary", "tfidf")


def load_stopwords() -> set[str]:
    text = resources.files("reportclf").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    return {line.strip() for line in text.splitlines() if line.strip()}


@dataclass
class BowVector:
    """Sparse feature vector; zero weights are never stored."""

    entries: dict[int, float]
    scheme: str


@dataclass
class IdfTable:
    idf: dict[int, float]
    num_documents: int


def fit_idf(docs: list[Document], vocab: Vocabulary) -> IdfTable:
    """Inverse document frequencies ln(|D|/df) from training documents only."""
    if not docs:
        raise ValueError("cannot fit idf on an empty corpus")
    df: Counter[int] = Counter()
    for doc in docs:
        seen = {vocab.token_to_index[t] for t in doc.tokens if t in vocab.token_to_index}
        df.update(seen)
    n = len(docs)
    return IdfTable(idf={i: math.log(n / c) for i, c in df.items()}, num_documents=n)


def vectorize(
    doc: Document,
    vocab: Vocabulary,
    scheme: str,
    idf: IdfTable | None = None,
    stopwords: set[str] | None = None,
) -> BowVector:
    """One document's sparse feature vector under the given scheme.

    Tokens outside the vocabulary are dropped. For tf-idf, tokens absent
    from the idf table (unseen in the idf's training documents) are dropped
    as well.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "tfidf":
        if idf is None:
            raise ValueError("tfidf vectorization requires an idf table")
        counts = Counter(vocab.token_to_index[t] for t in doc.tokens if t in vocab.token_to_index)
        entries = {}
        for i, c in counts.items():
            f = idf.idf.get(i)
            if f is not None and f != 0.0:
                entries[i] = c * f  # idf of 0 yields weight 0, which stays unstored
        return BowVector(entries=entries, scheme=scheme)
    if stopwords is None:
        raise ValueError(f"{scheme} vectorization requires a stopword set (may be empty)")
    kept = [t for t in doc.tokens if t not in stopwords and t in vocab.token_to_index]
    counts = Counter(vocab.token_to_index[t] for t in kept)
    if scheme == "tf":
        entries = {i: float(c) for i, c in counts.items()}
    elif scheme == "binary":
        entries = {i: 1.0 for i in counts}
    else:  # tf_norm
        total = sum(counts.values())
        entries = {i: c / total for i, c in counts.items()}
    return BowVector(entries=entries, scheme=scheme)


def vectorize_corpus(
    docs: list[Document],
    vocab: Vocabulary,
    scheme: str,
    idf: IdfTable | None = None,
    stopwords: set[str] | None = None,
) -> list[BowVector]:
    return [vectorize(d, vocab, scheme, idf=idf, stopwords=stopwords) for d in docs]
