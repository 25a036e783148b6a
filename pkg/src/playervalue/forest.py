"""Bagged random forests of CART trees and impurity-based importance."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, LeafNode, NoSplits, NonFiniteInput
from .trees import (Inner, Leaf, TreeConfig, TreeNode, fit_tree, iter_nodes,
                    predict_tree, predict_tree_batch, rank_codes, tree_from_dict,
                    tree_to_dict)


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    tree: TreeConfig = field(default_factory=lambda: TreeConfig(max_depth=6))
    feature_subset_size: int | None = None   # None: ceil(d / 3)
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")

    def subset_size(self, d: int) -> int:
        m = self.feature_subset_size or math.ceil(d / 3)
        if not 1 <= m <= d:
            raise ValueError(f"feature_subset_size {m} outside [1, {d}]")
        return m

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ForestConfig":
        data = dict(data)
        data["tree"] = TreeConfig(**data.get("tree", {}))
        return cls(**data)


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    per_tree_importance: np.ndarray
    importance: np.ndarray
    config: ForestConfig
    columns: tuple
    no_splits: bool = False
    norm_stats: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "columns": list(self.columns),
            "trees": [tree_to_dict(t) for t in self.trees],
            "importance": [{"name": c, "value": float(v)}
                           for c, v in zip(self.columns, self.importance)],
            "no_splits": self.no_splits,
        }
        if self.norm_stats is not None:
            out["norm_stats"] = [{"name": c, "mean": float(m), "scale": float(s)}
                                 for c, (m, s) in zip(self.columns, self.norm_stats)]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "ForestModel":
        trees = tuple(tree_from_dict(t) for t in data["trees"])
        columns = tuple(data["columns"])
        per_tree = np.array([_tree_importance_or_zero(t, len(columns)) for t in trees])
        norm = data.get("norm_stats")
        return cls(trees=trees, per_tree_importance=per_tree,
                   importance=np.array([e["value"] for e in data["importance"]]),
                   config=ForestConfig.from_dict(data["config"]), columns=columns,
                   no_splits=bool(data.get("no_splits", False)),
                   norm_stats=None if norm is None else np.array(
                       [[s["mean"], s["scale"]] for s in norm]))


def node_importance(node: TreeNode) -> float:
    """Weighted impurity decrease ``w V - sum(w_child V_child)`` of an inner node."""
    if not isinstance(node, Inner):
        raise LeafNode("leaf nodes carry no importance")
    return (node.weight * node.impurity
            - node.left.weight * node.left.impurity
            - node.right.weight * node.right.impurity)


def tree_feature_importance(root: TreeNode, n_features: int) -> np.ndarray:
    """Share of the tree's total impurity decrease attributable to each feature."""
    out = np.zeros(n_features)
    for node in iter_nodes(root):
        if isinstance(node, Inner):
            out[node.feature] += node_importance(node)
    total = out.sum()
    if isinstance(root, Leaf) or total <= 0:
        raise NoSplits("tree has no splits")
    return out / total


def _tree_importance_or_zero(root, n_features):
    try:
        return tree_feature_importance(root, n_features)
    except NoSplits:
        return np.zeros(n_features)


def _combine(per_tree: np.ndarray) -> tuple[np.ndarray, bool]:
    total = per_tree.sum(axis=0)
    mass = total.sum()
    if mass <= 0:
        return np.zeros(per_tree.shape[1]), True
    return total / mass, False


def forest_feature_importance(model: ForestModel) -> np.ndarray:
    """Per-feature sum of tree importances, renormalized to sum to 1."""
    importance, empty = _combine(model.per_tree_importance)
    if empty:
        raise NoSplits("no tree in the forest has a split")
    return importance


def fit_forest_arrays(X, y, cfg: ForestConfig = ForestConfig(), columns=None,
                      norm_stats=None, n_jobs: int = 1) -> ForestModel:
    """Grow ``cfg.n_trees`` trees, each from its own child seed.

    Trees are independent, so ``n_jobs > 1`` grows them on a thread pool; the
    result does not depend on ``n_jobs``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionMismatch(f"X {X.shape} vs y {y.shape}")
    if len(y) < 2:
        raise ValueError("need at least 2 samples")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("X and y must be finite")
    n, d = X.shape
    tree_cfg = replace(cfg.tree, feature_subset_size=cfg.subset_size(d))
    # child seeds are fixed up front so trees could be grown in any order
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)
    # ranks of a row subset keep their order, so one encoding serves every tree
    codes = rank_codes(X)

    def grow(child):
        rng = np.random.default_rng(child)
        if cfg.bootstrap:
            idx = rng.integers(0, n, size=n)
            return fit_tree(X[idx], y[idx], tree_cfg, rng, codes[idx])
        return fit_tree(X, y, tree_cfg, rng, codes)

    if n_jobs == 1:
        trees = [grow(child) for child in seeds]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(grow, seeds))
    per_tree = np.array([_tree_importance_or_zero(t, d) for t in trees])
    importance, empty = _combine(per_tree)
    if columns is None:
        columns = tuple(f"x{j}" for j in range(d))
    return ForestModel(trees=tuple(trees), per_tree_importance=per_tree,
                       importance=importance, config=cfg, columns=tuple(columns),
                       no_splits=empty, norm_stats=norm_stats)


def fit_forest(table, cfg: ForestConfig = ForestConfig()) -> ForestModel:
    """Fit on a normalized :class:`~playervalue.features.FeatureTable`."""
    return fit_forest_arrays(table.X, table.y, cfg, columns=table.columns,
                             norm_stats=table.norm_stats)


def predict_forest(model: ForestModel, x) -> float | np.ndarray:
    """Mean of the tree predictions, summed in tree order."""
    x = np.asarray(x, dtype=float)
    d = len(model.columns)
    if x.shape[-1] != d:
        raise DimensionMismatch(f"expected {d} features, got {x.shape[-1]}")
    if x.ndim == 1:
        total = 0.0
        for tree in model.trees:
            total = total + predict_tree(tree, x)
        return total / len(model.trees)
    total = np.zeros(len(x))
    for tree in model.trees:
        total = total + predict_tree_batch(tree, x)
    return total / len(model.trees)


def write_importance_csv(model: ForestModel, path, header=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(header)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "importance"])
        order = sorted(range(len(model.columns)),
                       key=lambda j: (-model.importance[j], j))
        for j in order:
            writer.writerow([model.columns[j], repr(float(model.importance[j]))])
