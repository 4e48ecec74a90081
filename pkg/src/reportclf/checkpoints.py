"""Versioned JSON checkpoints for every model family.

A checkpoint records the model configuration, all trainable parameter
arrays, and content hashes binding it to the vocabulary (and, for neural
models, the embedding table) it was trained with. Loading verifies those
hashes when the corresponding artifacts are supplied.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .bow import IdfTable
from .cnn import CnnConfig, CnnModel
from .forest import RandomForestModel, TreeNode
from .linear import LinearModel
from .util import DataError

FORMAT = "reportclf-checkpoint-v1"


def _arr(a: np.ndarray) -> list:
    return a.tolist()


def save_linear(model: LinearModel, scheme: str, vocab_hash: str, path: str | Path, idf: IdfTable | None = None) -> None:
    obj = {
        "format": FORMAT,
        "model_type": "bow-linear",
        "loss": model.loss,
        "scheme": scheme,
        "l2": model.l2,
        "classes": model.classes,
        "weights": _arr(model.weights),
        "bias": _arr(model.bias),
        "final_objective": model.final_objective,
        "vocab_hash": vocab_hash,
    }
    if idf is not None:
        obj["idf"] = {"num_documents": idf.num_documents, "values": {str(k): v for k, v in idf.idf.items()}}
    _write(obj, path)


def save_forest(model: RandomForestModel, scheme: str, vocab_hash: str, path: str | Path, idf: IdfTable | None = None) -> None:
    obj = {
        "format": FORMAT,
        "model_type": "bow-forest",
        "scheme": scheme,
        "classes": model.classes,
        "num_trees": model.num_trees,
        "max_features": model.max_features,
        "seed": model.seed,
        "trees": [t.to_json() for t in model.trees],
        "vocab_hash": vocab_hash,
    }
    if idf is not None:
        obj["idf"] = {"num_documents": idf.num_documents, "values": {str(k): v for k, v in idf.idf.items()}}
    _write(obj, path)


def save_cnn(model: CnnModel, path: str | Path) -> None:
    obj = {
        "format": FORMAT,
        "model_type": "nam" if model.has_attention else "cnn",
        "config": model.config.to_json(),
        "params": {k: _arr(v) for k, v in model.params.items()},
        "vocab_hash": model.vocab_hash,
        "embedding_hash": model.embedding_hash,
    }
    _write(obj, path)


def _write(obj: dict, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True), encoding="utf-8")


def load_checkpoint(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid checkpoint JSON ({exc})") from exc
    if obj.get("format") != FORMAT:
        raise DataError(f"{path}: unsupported checkpoint format {obj.get('format')!r}")
    return obj


def restore_linear(obj: dict) -> LinearModel:
    return LinearModel(
        weights=np.asarray(obj["weights"]),
        bias=np.asarray(obj["bias"]),
        loss=obj["loss"],
        l2=obj["l2"],
        classes=list(obj["classes"]),
        final_objective=obj.get("final_objective", float("nan")),
    )


def restore_forest(obj: dict) -> RandomForestModel:
    return RandomForestModel(
        trees=[TreeNode.from_json(t) for t in obj["trees"]],
        classes=list(obj["classes"]),
        num_trees=obj["num_trees"],
        max_features=obj["max_features"],
        seed=obj["seed"],
    )


def restore_idf(obj: dict) -> IdfTable | None:
    if "idf" not in obj:
        return None
    raw = obj["idf"]
    return IdfTable(idf={int(k): float(v) for k, v in raw["values"].items()}, num_documents=raw["num_documents"])


def restore_cnn(obj: dict, embedding: np.ndarray) -> CnnModel:
    """Rebuild a CNN/NAM model around an externally reconstructed embedding
    matrix (static mode) or the stored one (fine-tune mode)."""
    config = CnnConfig.from_json(obj["config"])
    params = {k: np.asarray(v) for k, v in obj["params"].items()}
    if config.embedding_mode == "fine-tune":
        embedding = params["embedding"]
    return CnnModel(
        config=config,
        params=params,
        embedding=embedding,
        vocab_hash=obj["vocab_hash"],
        embedding_hash=obj["embedding_hash"],
    )
