"""Shared helpers: stable hashing and seeded RNG streams.

Every random stream in the package is derived through `spawn_rng` so that
results are reproducible across runs and platforms (sha256 is stable, and
numpy's PCG64 is stable given the same integer seed).
"""

from __future__ import annotations

import hashlib
import json

import numpy as np


def stable_u64(*parts) -> int:
    """Map an arbitrary tuple of ints/strings to a stable 64-bit seed."""
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little")


def spawn_rng(*parts) -> np.random.Generator:
    return np.random.default_rng(stable_u64(*parts))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def json_hash(obj) -> str:
    """Content hash of a JSON-serializable object (key order insensitive)."""
    return sha256_hex(json.dumps(obj, sort_keys=True).encode("utf-8"))


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def neg_log_sigmoid(x):
    """-ln(sigmoid(x)), computed without overflow for large |x|."""
    return np.logaddexp(0.0, -np.asarray(x, dtype=float))


class DataError(Exception):
    """Bad or missing input data (corpus files, checkpoints, hash mismatches)."""
