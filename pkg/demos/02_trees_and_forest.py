"""Regression trees, forests and impurity-based feature importance.

Run: python3 demos/02_trees_and_forest.py
"""

import numpy as np

from playervalue import ForestConfig, TreeConfig, fit_tree
from playervalue.forest import fit_forest_arrays, predict_forest
from playervalue.trees import best_split, depth, impurity, leaves, tree_to_json

# Four points, one split: the variance drops from 25 to 0 at x = 2.5.
X = np.array([[1.0], [2.0], [3.0], [4.0]])
y = np.array([0.0, 0.0, 10.0, 10.0])
print("root impurity", impurity(y))
print("best split", best_split(X, y, min_samples_leaf=1))
print(tree_to_json(fit_tree(X, y, TreeConfig(min_samples_leaf=1))))

# Five informative columns among twenty-five.
rng = np.random.default_rng(0)
X = rng.normal(size=(2000, 25))
y = X[:, :5] @ np.array([2.0, 1.5, 1.0, 0.75, 0.5]) + rng.normal(size=2000)

tree = fit_tree(X, y, TreeConfig(max_depth=6))
print(f"\nsingle tree: depth {depth(tree)}, {len(leaves(tree))} leaves")

forest = fit_forest_arrays(X, y, ForestConfig(n_trees=100, seed=0))
print("forest importance (informative columns first):")
for j in np.argsort(-forest.importance)[:8]:
    tag = "informative" if j < 5 else "noise"
    print(f"  x{j:<3} {forest.importance[j]:.3f}  {tag}")

# A forest predicts the mean of its trees.
X_new = rng.normal(size=(5, 25))
print("\npredictions", np.round(predict_forest(forest, X_new), 3))
print("truth      ", np.round(X_new[:, :5] @ np.array([2.0, 1.5, 1.0, 0.75, 0.5]), 3))
