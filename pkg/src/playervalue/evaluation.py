"""K-fold cross-validation, cross-validated R² and grid search.

Normalization statistics are refit on each training complement and applied
to the held-out fold, so held-out rows never influence their own scaling.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import TooFewSamples
from .features import FeatureTable, apply_norm_stats, fit_norm_stats
from .forest import ForestConfig, fit_forest_arrays, predict_forest
from .lasso import LassoConfig, fit_lasso_arrays, predict_lasso
from .synth import SynthSpec, SyntheticData, generate_synthetic, generate_synthetic_corpus
from .trees import TreeConfig, fit_tree, predict_tree_batch

__all__ = ["CVReport", "GridResult", "SynthSpec", "SyntheticData", "cross_validate",
           "fit_model", "generate_synthetic", "generate_synthetic_corpus",
           "grid_search", "kfold_split", "model_kind", "predict_model"]

TOP_FEATURES = 10


def model_kind(spec) -> str:
    if isinstance(spec, LassoConfig):
        return "lasso"
    if isinstance(spec, ForestConfig):
        return "forest"
    if isinstance(spec, TreeConfig):
        return "tree"
    raise TypeError(f"unsupported model spec {type(spec).__name__}")


def fit_model(spec, X, y, columns=None, norm_stats=None):
    """Fit a lasso, forest or single tree according to the type of ``spec``."""
    kind = model_kind(spec)
    if kind == "lasso":
        return fit_lasso_arrays(X, y, spec, columns=columns, norm_stats=norm_stats)
    if kind == "forest":
        return fit_forest_arrays(X, y, spec, columns=columns, norm_stats=norm_stats)
    return fit_tree(X, y, spec)


def predict_model(spec, model, X) -> np.ndarray:
    kind = model_kind(spec)
    if kind == "lasso":
        return np.asarray(predict_lasso(model, X))
    if kind == "forest":
        return np.asarray(predict_forest(model, X))
    return predict_tree_batch(model, X)


def selected_features(spec, model, columns) -> list[str]:
    """Lasso active set, or the top forest features by importance."""
    kind = model_kind(spec)
    if kind == "lasso":
        return [columns[j] for j in np.flatnonzero(model.coefficients)]
    if kind == "forest":
        order = sorted(range(len(columns)), key=lambda j: (-model.importance[j], j))
        return [columns[j] for j in order[:TOP_FEATURES] if model.importance[j] > 0]
    return []


@dataclass(frozen=True)
class CVReport:
    position_code: str
    model_kind: str
    lam: float | None
    mse_cv: float
    r2_cv: float
    fold_mses: tuple
    fold_sizes: tuple
    n_samples: int
    selected_features: tuple = ()
    train_mse: float | None = None

    def to_dict(self) -> dict:
        return {
            "position_code": self.position_code, "model_kind": self.model_kind,
            "lambda": self.lam, "mse_cv": self.mse_cv, "r2_cv": self.r2_cv,
            "fold_mses": list(self.fold_mses), "fold_sizes": list(self.fold_sizes),
            "n_samples": self.n_samples,
            "selected_features": list(self.selected_features),
            "train_mse": self.train_mse,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def kfold_split(n: int, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Shuffled folds whose sizes differ by at most one."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise TooFewSamples(f"{n} samples cannot fill {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def _fold_result(table: FeatureTable, spec, test: np.ndarray):
    train = np.setdiff1d(np.arange(table.n_samples), test, assume_unique=True)
    stats, _ = fit_norm_stats(table.raw[train], table.kinds)
    X_train = apply_norm_stats(table.raw[train], stats)
    X_test = apply_norm_stats(table.raw[test], stats)
    model = fit_model(spec, X_train, table.y[train], table.columns, stats)
    err = predict_model(spec, model, X_test) - table.y[test]
    train_err = predict_model(spec, model, X_train) - table.y[train]
    return float(err @ err), float(train_err @ train_err), len(train)


def cross_validate(table: FeatureTable, spec, k: int = 5, seed: int = 0,
                   n_jobs: int = 1, full_fit: bool = True) -> CVReport:
    """Out-of-fold MSE and ``R² = 1 - MSE / Var(y)``.

    ``Var(y)`` is the population variance over the whole table. With
    ``full_fit`` the reported features come from one fit on all rows.
    """
    folds = kfold_split(table.n_samples, k, seed)
    if n_jobs == 1:
        results = [_fold_result(table, spec, f) for f in folds]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(lambda f: _fold_result(table, spec, f), folds))
    sse = np.array([r[0] for r in results])
    sizes = np.array([len(f) for f in folds])
    mse = float(sse.sum() / sizes.sum())
    r2 = 1.0 - mse / float(np.var(table.y))
    train_mse = float(sum(r[1] for r in results) / sum(r[2] for r in results))
    chosen = ()
    if full_fit:
        model = fit_model(spec, table.X, table.y, table.columns, table.norm_stats)
        chosen = tuple(selected_features(spec, model, table.columns))
    return CVReport(
        position_code=table.position_code, model_kind=model_kind(spec),
        lam=spec.lam if isinstance(spec, LassoConfig) else None,
        mse_cv=mse, r2_cv=r2, fold_mses=tuple((sse / sizes).tolist()),
        fold_sizes=tuple(sizes.tolist()), n_samples=table.n_samples,
        selected_features=chosen, train_mse=train_mse)


@dataclass(frozen=True)
class GridResult:
    best: object
    best_report: CVReport
    scores: tuple      # (spec, report) in grid order


def grid_search(table: FeatureTable, grid, k: int = 5, seed: int = 0,
                n_jobs: int = 1) -> GridResult:
    """Cross-validate every grid point; the first maximum of ``r2_cv`` wins."""
    grid = list(grid)
    if not grid:
        raise ValueError("empty grid")

    def run(spec):
        return cross_validate(table, spec, k, seed, full_fit=False)

    if n_jobs == 1:
        reports = [run(s) for s in grid]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            reports = list(pool.map(run, grid))
    best = 0
    for i, rep in enumerate(reports):
        if rep.r2_cv > reports[best].r2_cv:
            best = i
    return GridResult(best=grid[best], best_report=reports[best],
                      scores=tuple(zip(grid, reports)))


def write_cv_table(rows, path, header=None):
    """CSV with ``position,model,lambda,mse,r2`` per report."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(header)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["position", "model", "lambda", "mse", "r2"])
        for rep in rows:
            writer.writerow([rep.position_code, rep.model_kind,
                             "" if rep.lam is None else repr(rep.lam),
                             repr(rep.mse_cv), repr(rep.r2_cv)])


def with_lambda(spec: LassoConfig, lam: float) -> LassoConfig:
    return replace(spec, lam=lam)
