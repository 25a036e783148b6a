import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from playervalue.errors import DimensionMismatch, LeafNode, NoSplits
from playervalue.forest import (ForestConfig, ForestModel, fit_forest_arrays,
                                forest_feature_importance, node_importance,
                                predict_forest, tree_feature_importance)
from playervalue.trees import (Inner, Leaf, TreeConfig, fit_tree, predict_tree,
                               predict_tree_batch, tree_to_json)


def planted(rng, n=300, d=6):
    X = rng.normal(size=(n, d))
    y = 3.0 * (X[:, 0] > 0) + 1.5 * X[:, 2] + 0.1 * rng.normal(size=n)
    return X, y


def test_node_importance_hand_example():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([0.0, 0.0, 10.0, 10.0])
    root = fit_tree(X, y, TreeConfig(max_depth=1, min_samples_leaf=1))
    assert node_importance(root) == 25.0
    np.testing.assert_array_equal(tree_feature_importance(root, 1), [1.0])
    with pytest.raises(LeafNode):
        node_importance(root.left)


def test_importance_on_hand_weighted_tree():
    # root on x0 (w=1, V=4), left child on x1 (w=0.5, V=2), three leaves
    left = Inner(1, 0.0, Leaf(0.0, 1, 0.5, 0.25), Leaf(0.0, 1, 1.0, 0.25), 2, 2.0, 0.5)
    root = Inner(0, 0.0, left, Leaf(0.0, 2, 1.0, 0.5), 4, 4.0, 1.0)
    # root: 4 - 0.5*2 - 0.5*1 = 2.5; left: 0.5*2 - 0.25*0.5 - 0.25*1 = 0.625
    assert node_importance(root) == 2.5
    assert node_importance(left) == 0.625
    imp = tree_feature_importance(root, 3)
    np.testing.assert_allclose(imp, [2.5 / 3.125, 0.625 / 3.125, 0.0], atol=1e-15)


def test_prediction_is_mean_of_trees():
    rng = np.random.default_rng(0)
    X, y = planted(rng)
    model = fit_forest_arrays(X, y, ForestConfig(n_trees=7, seed=3))
    rows = rng.normal(size=(20, X.shape[1]))
    by_hand = np.mean([predict_tree_batch(t, rows) for t in model.trees], axis=0)
    np.testing.assert_allclose(predict_forest(model, rows), by_hand, rtol=1e-14)
    single = predict_forest(model, rows[0])
    assert single == pytest.approx(np.mean([predict_tree(t, rows[0]) for t in model.trees]),
                                   rel=1e-14)
    with pytest.raises(DimensionMismatch):
        predict_forest(model, rows[0, :3])


def test_degenerate_forest_equals_single_tree():
    rng = np.random.default_rng(1)
    X, y = planted(rng, d=4)
    tree_cfg = TreeConfig(max_depth=5, min_samples_leaf=3)
    forest = fit_forest_arrays(X, y, ForestConfig(n_trees=1, tree=tree_cfg,
                                                  feature_subset_size=4, bootstrap=False))
    tree = fit_tree(X, y, tree_cfg)
    assert tree_to_json(forest.trees[0]) == tree_to_json(tree)
    np.testing.assert_array_equal(predict_forest(forest, X), predict_tree_batch(tree, X))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), n_trees=st.integers(1, 8))
def test_importance_is_a_distribution(seed, n_trees):
    rng = np.random.default_rng(seed)
    X, y = planted(rng, n=80, d=5)
    model = fit_forest_arrays(X, y, ForestConfig(n_trees=n_trees, seed=seed,
                                                 tree=TreeConfig(max_depth=4)))
    assert np.all(model.importance >= 0)
    assert abs(model.importance.sum() - 1.0) <= 1e-12
    for row in model.per_tree_importance:
        assert np.all(row >= 0)
        assert abs(row.sum() - 1.0) <= 1e-12
    np.testing.assert_allclose(forest_feature_importance(model), model.importance)


def test_constant_target_has_no_splits():
    X = np.random.default_rng(2).normal(size=(30, 3))
    model = fit_forest_arrays(X, np.full(30, 5.0), ForestConfig(n_trees=4))
    assert model.no_splits
    assert all(isinstance(t, Leaf) for t in model.trees)
    np.testing.assert_array_equal(predict_forest(model, X), 5.0)
    with pytest.raises(NoSplits):
        forest_feature_importance(model)


def test_planted_features_rank_first():
    rng = np.random.default_rng(3)
    X, y = planted(rng, n=500, d=8)
    model = fit_forest_arrays(X, y, ForestConfig(n_trees=40, seed=1))
    top = set(np.argsort(-model.importance)[:2].tolist())
    assert top == {0, 2}
    assert model.importance[[0, 2]].sum() > 0.8


def test_seed_determinism():
    rng = np.random.default_rng(4)
    X, y = planted(rng, n=150)
    cfg = ForestConfig(n_trees=5, seed=11)
    a = fit_forest_arrays(X, y, cfg)
    b = fit_forest_arrays(X, y, cfg)
    c = fit_forest_arrays(X, y, ForestConfig(n_trees=5, seed=12))
    assert a.to_json() == b.to_json()
    assert a.to_json() != c.to_json()


def test_json_round_trip():
    rng = np.random.default_rng(5)
    X, y = planted(rng, n=120, d=4)
    model = fit_forest_arrays(X, y, ForestConfig(n_trees=3, seed=2), columns=list("abcd"),
                              norm_stats=np.ones((4, 2)))
    back = ForestModel.from_dict(json.loads(model.to_json()))
    assert back.to_json() == model.to_json()
    np.testing.assert_array_equal(predict_forest(back, X), predict_forest(model, X))
    np.testing.assert_allclose(back.per_tree_importance, model.per_tree_importance)


def test_subset_size_default():
    assert ForestConfig().subset_size(155) == 52
    assert ForestConfig().subset_size(2) == 1
    with pytest.raises(ValueError):
        ForestConfig(feature_subset_size=9).subset_size(4)
