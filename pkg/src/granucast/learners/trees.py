"""Regression trees: bagged CART forest and second-order gradient boosting.

Both share a flat array-of-nodes tree representation that serializes to
plain lists. Split search is exact over sorted feature values with prefix
sums; ties break to the lowest feature index, then the lowest threshold,
so rebuilds are reproducible across platforms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

_LEAF = -1


@dataclass
class Tree:
    """Binary regression tree as parallel node arrays."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def add_node(self) -> int:
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    @property
    def leaf_count(self) -> int:
        return sum(1 for f in self.feature if f == _LEAF)

    def leaf_values(self) -> np.ndarray:
        return np.array([v for f, v in zip(self.feature, self.value) if f == _LEAF])

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = np.empty(len(x))
        for row, sample in enumerate(x):
            node = 0
            while self.feature[node] != _LEAF:
                if sample[self.feature[node]] <= self.threshold[node]:
                    node = self.left[node]
                else:
                    node = self.right[node]
            out[row] = self.value[node]
        return out

    def to_lists(self) -> dict:
        return {
            "feature": list(self.feature),
            "threshold": list(self.threshold),
            "left": list(self.left),
            "right": list(self.right),
            "value": list(self.value),
        }

    @classmethod
    def from_lists(cls, data: dict) -> "Tree":
        return cls(
            feature=list(data["feature"]),
            threshold=list(data["threshold"]),
            left=list(data["left"]),
            right=list(data["right"]),
            value=list(data["value"]),
        )


def _best_sse_split(x: np.ndarray, y: np.ndarray, feature_indices) -> tuple[int, float] | None:
    """Split minimizing the summed squared error of the two sides.

    Returns (feature, threshold) or None when every candidate feature is
    constant. Strict improvement comparisons keep the lowest feature index
    and lowest threshold on ties.
    """
    n = len(y)
    best_sse = np.inf
    best: tuple[int, float] | None = None
    for j in sorted(feature_indices):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        ys = y[order]
        cuts = np.nonzero(xs[1:] > xs[:-1])[0] + 1
        if len(cuts) == 0:
            continue
        s1 = np.cumsum(ys)
        s2 = np.cumsum(ys**2)
        left_n = cuts.astype(np.float64)
        left1 = s1[cuts - 1]
        left2 = s2[cuts - 1]
        right_n = n - left_n
        sse = (left2 - left1**2 / left_n) + ((s2[-1] - left2) - (s1[-1] - left1) ** 2 / right_n)
        pick = int(np.argmin(sse))
        if sse[pick] < best_sse:
            best_sse = float(sse[pick])
            cut = cuts[pick]
            best = (int(j), float((xs[cut - 1] + xs[cut]) / 2.0))
    return best


def build_cart(
    x: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    max_depth: int | None = None,
    features_per_split: int | None = None,
    min_samples_split: int = 2,
) -> Tree:
    """Greedy variance-reduction CART; optional per-split feature sampling."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n_features = x.shape[1]
    tree = Tree()

    def grow(indices: np.ndarray, depth: int) -> int:
        node = tree.add_node()
        sub_y = y[indices]
        tree.value[node] = float(sub_y.mean())
        if (
            len(indices) < min_samples_split
            or (max_depth is not None and depth >= max_depth)
            or np.all(sub_y == sub_y[0])
        ):
            return node
        if features_per_split is None or features_per_split >= n_features:
            candidates = range(n_features)
        else:
            candidates = rng.choice(n_features, size=features_per_split, replace=False)
        split = _best_sse_split(x[indices], sub_y, candidates)
        if split is None:
            return node
        feature, threshold = split
        goes_left = x[indices, feature] <= threshold
        left_id = grow(indices[goes_left], depth + 1)
        right_id = grow(indices[~goes_left], depth + 1)
        tree.feature[node] = feature
        tree.threshold[node] = threshold
        tree.left[node] = left_id
        tree.right[node] = right_id
        return node

    grow(np.arange(len(y)), 0)
    return tree


@dataclass
class RandomForest:
    """Bootstrap-aggregated CART trees; prediction is the plain tree mean."""

    trees: list[Tree]

    @classmethod
    def fit(
        cls,
        x: np.ndarray,
        y: np.ndarray,
        tree_count: int,
        seed: int,
        max_depth: int | None = None,
        bootstrap: bool = True,
        features_per_split: int | None = None,
    ) -> "RandomForest":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if np.all(y == y[0]):
            logger.warning("all targets identical; forest degenerates to a constant")
        n, f = x.shape
        if features_per_split is None:
            features_per_split = math.ceil(math.sqrt(f))
        trees = []
        for index in range(tree_count):
            # derived per-tree seed keeps parallel and serial builds identical
            rng = np.random.default_rng(seed + index)
            rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
            trees.append(
                build_cart(
                    x[rows],
                    y[rows],
                    rng,
                    max_depth=max_depth,
                    features_per_split=features_per_split,
                )
            )
        return cls(trees=trees)

    def tree_predictions(self, x: np.ndarray) -> np.ndarray:
        return np.stack([tree.predict(x) for tree in self.trees])

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.tree_predictions(x).mean(axis=0)


def _best_gain_split(
    x: np.ndarray, g: np.ndarray, lambda_reg: float
) -> tuple[float, int, float] | None:
    """Split maximizing the second-order gain for squared loss (hessian 1).

    Gain is measured against keeping the node whole; the caller compares it
    with the leaf-count penalty before accepting.
    """
    n = len(g)
    total_g = g.sum()
    parent_score = total_g**2 / (n + lambda_reg)
    best_gain = -np.inf
    best: tuple[float, int, float] | None = None
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        gs = g[order]
        cuts = np.nonzero(xs[1:] > xs[:-1])[0] + 1
        if len(cuts) == 0:
            continue
        prefix = np.cumsum(gs)
        left_g = prefix[cuts - 1]
        left_n = cuts.astype(np.float64)
        gain = 0.5 * (
            left_g**2 / (left_n + lambda_reg)
            + (total_g - left_g) ** 2 / (n - left_n + lambda_reg)
            - parent_score
        )
        pick = int(np.argmax(gain))
        if gain[pick] > best_gain:
            best_gain = float(gain[pick])
            cut = cuts[pick]
            best = (best_gain, j, float((xs[cut - 1] + xs[cut]) / 2.0))
    return best


def build_boosted_tree(
    x: np.ndarray,
    residual_grad: np.ndarray,
    lambda_reg: float,
    gamma_reg: float,
    max_depth: int,
) -> Tree:
    """One boosting round's tree on gradients of squared loss.

    Leaf weight is -G / (H + lambda) with H = member count; a split is kept
    only when its gain exceeds gamma.
    """
    tree = Tree()

    def grow(indices: np.ndarray, depth: int) -> int:
        node = tree.add_node()
        g_sum = residual_grad[indices].sum()
        tree.value[node] = float(-g_sum / (len(indices) + lambda_reg))
        if depth >= max_depth or len(indices) < 2:
            return node
        split = _best_gain_split(x[indices], residual_grad[indices], lambda_reg)
        if split is None or split[0] <= gamma_reg:
            return node
        _, feature, threshold = split
        goes_left = x[indices, feature] <= threshold
        left_id = grow(indices[goes_left], depth + 1)
        right_id = grow(indices[~goes_left], depth + 1)
        tree.feature[node] = feature
        tree.threshold[node] = threshold
        tree.left[node] = left_id
        tree.right[node] = right_id
        return node

    grow(np.arange(len(residual_grad)), 0)
    return tree


@dataclass
class BoostedTrees:
    """Additive tree ensemble fit by gradient boosting on squared loss."""

    base_score: float
    shrinkage: float
    lambda_reg: float
    gamma_reg: float
    trees: list[Tree] = field(default_factory=list)
    objective_history: list[float] = field(default_factory=list)

    @classmethod
    def fit(
        cls,
        x: np.ndarray,
        y: np.ndarray,
        rounds: int,
        max_depth: int = 1,
        lambda_reg: float = 1.0,
        gamma_reg: float = 0.0,
        shrinkage: float = 0.3,
    ) -> "BoostedTrees":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if np.all(y == y[0]):
            logger.warning("all targets identical; boosting fits single-leaf trees")
        model = cls(
            base_score=float(y.mean()),
            shrinkage=shrinkage,
            lambda_reg=lambda_reg,
            gamma_reg=gamma_reg,
        )
        pred = np.full(len(y), model.base_score)
        penalty = 0.0
        model.objective_history.append(model._objective(y, pred, penalty))
        for _ in range(rounds):
            grad = pred - y
            tree = build_boosted_tree(x, grad, lambda_reg, gamma_reg, max_depth)
            model.trees.append(tree)
            pred += shrinkage * tree.predict(x)
            shrunk = shrinkage * tree.leaf_values()
            penalty += gamma_reg * tree.leaf_count + (lambda_reg / 2.0) * float(
                (shrunk**2).sum()
            )
            model.objective_history.append(model._objective(y, pred, penalty))
        return model

    @staticmethod
    def _objective(y: np.ndarray, pred: np.ndarray, penalty: float) -> float:
        return float(0.5 * ((y - pred) ** 2).sum() + penalty)

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        pred = np.full(len(x), self.base_score)
        for tree in self.trees:
            pred += self.shrinkage * tree.predict(x)
        return pred
