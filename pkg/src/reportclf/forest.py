"""Random forest over BOW features: bagged CART trees, Gini impurity,
axis-aligned splits on a random feature subset per node.

Each tree draws its own RNG stream from (seed, tree index), so training a
forest is bit-reproducible and trees could be fit in parallel without
changing the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bow import BowVector
from .linear import _to_dense
from .util import spawn_rng


@dataclass
class TreeNode:
    counts: np.ndarray  # class-count histogram of the training samples here
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_json(self) -> dict:
        obj: dict = {"counts": [int(c) for c in self.counts]}
        if not self.is_leaf:
            obj.update(
                feature=self.feature,
                threshold=self.threshold,
                left=self.left.to_json(),
                right=self.right.to_json(),
            )
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "TreeNode":
        node = cls(counts=np.asarray(obj["counts"], dtype=np.int64))
        if "feature" in obj:
            node.feature = int(obj["feature"])
            node.threshold = float(obj["threshold"])
            node.left = cls.from_json(obj["left"])
            node.right = cls.from_json(obj["right"])
        return node


@dataclass
class RandomForestModel:
    trees: list[TreeNode]
    classes: list[int]
    num_trees: int
    max_features: int
    seed: int

    def predict(self, x: BowVector) -> tuple[int, np.ndarray]:
        votes = np.zeros(len(self.classes))
        for root in self.trees:
            votes[_tree_vote(root, x)] += 1
        return self.classes[int(np.argmax(votes))], votes


def _tree_vote(node: TreeNode, x: BowVector) -> int:
    while not node.is_leaf:
        value = x.entries.get(node.feature, 0.0)
        node = node.left if value <= node.threshold else node.right
    return int(np.argmax(node.counts))


def train_forest(
    xs: list[BowVector],
    labels: list[int],
    dim: int,
    num_trees: int = 100,
    max_features: int | None = None,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    seed: int = 0,
) -> RandomForestModel:
    if not xs:
        raise ValueError("empty training set")
    classes = sorted(set(labels))
    X = _to_dense(xs, dim)
    y = np.asarray([classes.index(l) for l in labels])
    if max_features is None:
        max_features = int(math.ceil(math.sqrt(dim)))
    max_features = min(max_features, dim)

    trees = []
    for t in range(num_trees):
        rng = spawn_rng(seed, "forest-tree", t)
        boot = rng.integers(0, len(xs), size=len(xs))
        trees.append(_grow_tree(X, y, boot, len(classes), max_features, max_depth, min_samples_split, rng))
    return RandomForestModel(
        trees=trees, classes=classes, num_trees=num_trees, max_features=max_features, seed=seed
    )


def _grow_tree(X, y, sample_idx, num_classes, max_features, max_depth, min_samples_split, rng) -> TreeNode:
    root = TreeNode(counts=np.bincount(y[sample_idx], minlength=num_classes))
    stack = [(root, sample_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        if (
            len(idx) < min_samples_split
            or (max_depth is not None and depth >= max_depth)
            or node.counts.max() == len(idx)  # pure node
        ):
            continue
        feats = np.sort(rng.choice(X.shape[1], size=max_features, replace=False))
        split = _best_split(X, ys, idx, feats, num_classes)
        if split is None:
            continue
        feature, threshold = split
        go_left = X[idx, feature] <= threshold
        left_idx, right_idx = idx[go_left], idx[~go_left]
        node.feature = int(feature)
        node.threshold = float(threshold)
        node.left = TreeNode(counts=np.bincount(y[left_idx], minlength=num_classes))
        node.right = TreeNode(counts=np.bincount(y[right_idx], minlength=num_classes))
        stack.append((node.right, right_idx, depth + 1))
        stack.append((node.left, left_idx, depth + 1))
    return root


def _best_split(X, ys, idx, features, num_classes):
    """Split with the largest Gini decrease; ties keep the first candidate
    in (ascending feature, ascending threshold) order."""
    n = len(idx)
    onehot = np.eye(num_classes)[ys]
    parent_gini = _gini(onehot.sum(axis=0))
    best = None
    best_score = 0.0
    for f in features:
        values = X[idx, f]
        order = np.argsort(values, kind="stable")
        v_sorted = values[order]
        cum = np.cumsum(onehot[order], axis=0)
        boundaries = np.nonzero(np.diff(v_sorted) > 0)[0]
        if boundaries.size == 0:
            continue
        left_counts = cum[boundaries]
        total = cum[-1]
        right_counts = total - left_counts
        n_left = boundaries + 1
        n_right = n - n_left
        gini_left = 1.0 - (left_counts**2).sum(axis=1) / n_left**2
        gini_right = 1.0 - (right_counts**2).sum(axis=1) / n_right**2
        decrease = parent_gini - (n_left * gini_left + n_right * gini_right) / n
        k = int(np.argmax(decrease))
        if decrease[k] > best_score + 1e-12:
            best_score = float(decrease[k])
            threshold = (v_sorted[boundaries[k]] + v_sorted[boundaries[k] + 1]) / 2.0
            best = (int(f), float(threshold))
    return best


def _gini(counts) -> float:
    n = counts.sum()
    return float(1.0 - ((counts / n) ** 2).sum())
