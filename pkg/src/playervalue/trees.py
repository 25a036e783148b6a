"""CART regression trees with variance impurity.

A node sends a sample left when ``x[feature] < threshold``. Candidate
thresholds are midpoints between consecutive distinct feature values; ties
between equally good splits go to the lower feature index, then the lower
threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import DimensionMismatch, EmptyTargets

# relative margin a split must beat the parent impurity by
_MIN_DECREASE = 1e-12


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = 6
    min_samples_leaf: int = 5
    min_samples_split: int | None = None
    feature_subset_size: int | None = None

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.min_samples_split is None:
            object.__setattr__(self, "min_samples_split", 2 * self.min_samples_leaf)
        if self.feature_subset_size is not None and self.feature_subset_size < 1:
            raise ValueError("feature_subset_size must be >= 1")


@dataclass
class Leaf:
    prediction: float
    n_samples: int
    impurity: float
    weight: float = 1.0


@dataclass
class Inner:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"
    n_samples: int
    impurity: float
    weight: float = 1.0


TreeNode = Union[Leaf, Inner]


class Split(NamedTuple):
    feature: int
    threshold: float
    impurity: float   # weighted child impurity


def impurity(targets) -> float:
    """Population variance of the targets."""
    y = np.asarray(targets, dtype=float)
    if y.size == 0:
        raise EmptyTargets("impurity of an empty node")
    return float(np.var(y))


def rank_codes(X) -> np.ndarray:
    """Dense per-column ranks of ``X`` as small unsigned integers.

    Sorting these instead of the floats gives the same order and lets numpy
    use its radix sort.
    """
    X = np.asarray(X, dtype=float)
    codes = np.empty(X.shape, dtype=np.uint32)
    top = 0
    for j in range(X.shape[1]):
        _, inv = np.unique(X[:, j], return_inverse=True)
        codes[:, j] = inv.reshape(-1)
        top = max(top, int(inv.max(initial=0)))
    return codes.astype(np.uint16) if top < 2 ** 16 else codes


def best_split(X, y, candidate_features=None, min_samples_leaf=1,
               codes=None) -> Split | None:
    """Exhaustive search for the split minimising weighted child variance.

    ``codes`` optionally holds :func:`rank_codes` of ``X``. Returns ``None``
    when no split respecting ``min_samples_leaf`` strictly lowers the
    impurity.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if candidate_features is None:
        candidate_features = range(X.shape[1])
    cand = np.sort(np.asarray(list(candidate_features), dtype=np.intp))
    if n < 2 * min_samples_leaf or cand.size == 0:
        return None
    yc = y - y.mean()
    total = float(yc @ yc)
    if total == 0.0 or np.ptp(y) == 0.0:
        return None
    keys = rank_codes(X[:, cand]) if codes is None else codes[:, cand]
    split = _search(X[:, cand], yc, total, keys, min_samples_leaf)
    if split is None:
        return None
    return Split(int(cand[split.feature]), split.threshold, split.impurity)


def _search(X, yc, total, keys, min_samples_leaf) -> Split | None:
    """Best split of centred targets ``yc`` over every column of ``X``."""
    n = len(yc)
    order = np.argsort(keys.T, axis=1, kind="stable")     # features x samples
    ks = np.take_along_axis(keys.T, order, axis=1)
    s1 = np.cumsum(yc[order], axis=1)[:, :-1]
    t1 = float(yc.sum())
    n_left = np.arange(1, n, dtype=float)
    n_right = n - n_left
    # SSE_left + SSE_right = total - s1^2 / n_l - (t1 - s1)^2 / n_r
    child = np.maximum(total - s1 * s1 / n_left - (t1 - s1) ** 2 / n_right, 0.0) / n

    legal = ks[:, :-1] < ks[:, 1:]
    if min_samples_leaf > 1:
        legal[:, : min_samples_leaf - 1] = False
        legal[:, n - min_samples_leaf:] = False
    if not legal.any():
        return None
    child = np.where(legal, child, np.inf)
    # rows are features in ascending order: first minimum is lowest feature, lowest threshold
    flat = int(np.argmin(child))
    f, i = divmod(flat, n - 1)
    best = float(child[f, i])
    if not best < (total / n) * (1.0 - _MIN_DECREASE):
        return None
    lo, hi = X[order[f, i], f], X[order[f, i + 1], f]
    threshold = 0.5 * (lo + hi)
    if not lo < threshold:
        threshold = hi
    return Split(f, float(threshold), best)


def fit_tree(X, y, cfg: TreeConfig = TreeConfig(), rng=None, codes=None) -> TreeNode:
    """Grow a tree greedily until depth, size or impurity stops it.

    With ``cfg.feature_subset_size`` set, every node draws that many distinct
    candidate features from ``rng`` (a ``numpy.random.Generator`` or seed).
    ``codes`` may carry precomputed :func:`rank_codes` of ``X``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionMismatch(f"X {X.shape} vs y {y.shape}")
    if len(y) == 0:
        raise EmptyTargets("cannot fit a tree on no samples")
    n, d = X.shape
    if codes is None:
        codes = rank_codes(X)
    subset = cfg.feature_subset_size
    if subset is not None and subset >= d:
        subset = None
    if subset is not None:
        rng = np.random.default_rng(rng)
    all_features = np.arange(d)

    def grow(idx, depth):
        k = len(idx)
        yn = y[idx]
        mean = float(np.mean(yn))
        yc = yn - mean
        total = float(yc @ yc)
        node_imp = total / k
        weight = k / n
        split = None
        if not ((cfg.max_depth is not None and depth >= cfg.max_depth)
                or k < cfg.min_samples_split or k < 2 * cfg.min_samples_leaf
                or total == 0.0 or np.ptp(yn) == 0.0):
            cand = all_features
            if subset is not None:
                cand = np.sort(rng.choice(d, size=subset, replace=False))
            sub = np.ix_(idx, cand)
            split = _search(X[sub], yc, total, codes[sub], cfg.min_samples_leaf)
        if split is None:
            return Leaf(mean, k, node_imp, weight)
        feature = int(cand[split.feature])
        go_left = X[idx, feature] < split.threshold
        return Inner(feature, split.threshold,
                     grow(idx[go_left], depth + 1), grow(idx[~go_left], depth + 1),
                     k, node_imp, weight)

    return grow(np.arange(n), 0)


def predict_tree(root: TreeNode, x_row, n_features=None) -> float:
    x = np.asarray(x_row, dtype=float)
    if x.ndim != 1 or (n_features is not None and len(x) != n_features):
        raise DimensionMismatch("expected a single feature row")
    node = root
    while isinstance(node, Inner):
        if node.feature >= len(x):
            raise DimensionMismatch(f"row has no feature {node.feature}")
        node = node.left if x[node.feature] < node.threshold else node.right
    return node.prediction


def predict_tree_batch(root: TreeNode, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = np.empty(len(X))
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        if isinstance(node, Leaf):
            out[idx] = node.prediction
            continue
        left = X[idx, node.feature] < node.threshold
        stack.append((node.left, idx[left]))
        stack.append((node.right, idx[~left]))
    return out


def iter_nodes(root: TreeNode):
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Inner):
            stack.append(node.right)
            stack.append(node.left)


def leaves(root: TreeNode) -> list[Leaf]:
    return [node for node in iter_nodes(root) if isinstance(node, Leaf)]


def depth(root: TreeNode) -> int:
    if isinstance(root, Leaf):
        return 0
    return 1 + max(depth(root.left), depth(root.right))


def tree_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"value": node.prediction, "n_samples": node.n_samples,
                "impurity": node.impurity, "weight": node.weight}
    return {"feature": node.feature, "threshold": node.threshold,
            "n_samples": node.n_samples, "impurity": node.impurity,
            "weight": node.weight,
            "left": tree_to_dict(node.left), "right": tree_to_dict(node.right)}


def tree_from_dict(data: dict) -> TreeNode:
    if "value" in data:
        return Leaf(float(data["value"]), int(data["n_samples"]),
                    float(data["impurity"]), float(data.get("weight", 1.0)))
    return Inner(int(data["feature"]), float(data["threshold"]),
                 tree_from_dict(data["left"]), tree_from_dict(data["right"]),
                 int(data["n_samples"]), float(data["impurity"]),
                 float(data.get("weight", 1.0)))


def tree_to_json(node: TreeNode) -> str:
    return json.dumps(tree_to_dict(node), separators=(",", ":"))
