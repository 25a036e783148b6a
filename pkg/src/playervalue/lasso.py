"""L1-penalized least squares by cyclic coordinate descent.

Two objective scalings are supported::

    SUM:   sum_i (y_i - a - x_i.b)^2        + lam * |b|_1
    MEAN:  (1/2n) sum_i (y_i - a - x_i.b)^2 + lam * |b|_1

SUM is the textbook Lagrangian form. MEAN is the default because it makes
``lam`` comparable across sample sizes; values around 0.004-0.01 then keep a
handful of features on standardized data.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput


class Scaling(str, enum.Enum):
    SUM = "sum"
    MEAN = "mean"


@dataclass(frozen=True)
class LassoConfig:
    lam: float = 0.005
    max_sweeps: int = 1000
    tol: float = 1e-7
    scaling: Scaling = Scaling.MEAN

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("lambda must be non-negative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        object.__setattr__(self, "scaling", Scaling(self.scaling))


@dataclass(frozen=True)
class LassoModel:
    intercept: float
    coefficients: np.ndarray
    lam: float
    columns: tuple
    converged: bool
    sweeps_used: int
    scaling: Scaling = Scaling.MEAN
    norm_stats: np.ndarray | None = None
    objective_history: tuple = field(default=(), repr=False, compare=False)

    @property
    def active_set(self) -> list[str]:
        return [c for c, b in zip(self.columns, self.coefficients) if b != 0.0]

    def to_dict(self) -> dict:
        out = {
            "lambda": self.lam,
            "scaling": self.scaling.value,
            "intercept": self.intercept,
            "coefficients": [{"name": c, "value": float(b)}
                             for c, b in zip(self.columns, self.coefficients)],
            "converged": self.converged,
            "sweeps_used": self.sweeps_used,
        }
        if self.norm_stats is not None:
            out["norm_stats"] = [{"name": c, "mean": float(m), "scale": float(s)}
                                 for c, (m, s) in zip(self.columns, self.norm_stats)]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "LassoModel":
        coefs = data["coefficients"]
        norm = data.get("norm_stats")
        return cls(
            intercept=float(data["intercept"]),
            coefficients=np.array([c["value"] for c in coefs], dtype=float),
            lam=float(data["lambda"]),
            columns=tuple(c["name"] for c in coefs),
            converged=bool(data.get("converged", True)),
            sweeps_used=int(data.get("sweeps_used", 0)),
            scaling=Scaling(data.get("scaling", "mean")),
            norm_stats=None if norm is None else np.array(
                [[s["mean"], s["scale"]] for s in norm], dtype=float),
        )


def soft_threshold(z: float, gamma: float) -> float:
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def _check_finite(X, y):
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("X and y must be finite")


def lambda_max(X, y, scaling=Scaling.MEAN) -> float:
    """Smallest penalty at which the all-zero coefficient vector is optimal."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size == 0 or np.ptp(y) == 0.0:
        return 0.0
    Xc = X - X.mean(axis=0)
    grad = np.abs(Xc.T @ (y - y.mean()))
    top = float(grad.max()) if grad.size else 0.0
    if Scaling(scaling) is Scaling.SUM:
        return 2.0 * top
    return top / len(y)


def objective(X, y, intercept, beta, lam, scaling=Scaling.MEAN) -> float:
    r = np.asarray(y) - intercept - np.asarray(X) @ beta
    rss = float(r @ r)
    smooth = rss if Scaling(scaling) is Scaling.SUM else rss / (2 * len(r))
    return smooth + lam * float(np.abs(beta).sum())


def smooth_gradient(X, y, beta, scaling=Scaling.MEAN) -> np.ndarray:
    """Gradient of the squared-error term at ``beta`` with the intercept profiled out."""
    X = np.asarray(X, dtype=float)
    Xc = X - X.mean(axis=0)
    r = (np.asarray(y) - np.mean(y)) - Xc @ beta
    if Scaling(scaling) is Scaling.SUM:
        return -2.0 * (Xc.T @ r)
    return -(Xc.T @ r) / len(r)


def kkt_residuals(X, y, beta, lam, scaling=Scaling.MEAN) -> np.ndarray:
    """Per-coordinate violation of the subgradient optimality conditions."""
    g = smooth_gradient(X, y, beta, scaling)
    return np.where(beta != 0, np.abs(g + lam * np.sign(beta)),
                    np.maximum(np.abs(g) - lam, 0.0))


def coordinate_descent(X, y, lam, scaling=Scaling.MEAN, max_sweeps=1000, tol=1e-7):
    """Minimise the penalized objective for centred ``X`` and ``y``.

    Returns ``(beta, converged, sweeps, objective_history)``. Coordinates are
    visited in column order starting from zero; the gradient is kept up to
    date through the Gram matrix so one update costs O(d).
    """
    n, d = X.shape
    scaling = Scaling(scaling)
    # per-coordinate problem: minimise (c/2) b^2 - z b + lam |b|
    fac = 2.0 if scaling is Scaling.SUM else 1.0 / n
    gram = fac * (X.T @ X)
    corr = fac * (X.T @ y)          # fac * X^T r at beta = 0
    curv = np.diag(gram).copy()
    beta = np.zeros(d)
    history = [objective(X, y, 0.0, beta, lam, scaling)]
    converged = bool(d == 0)
    sweeps = 0
    while not converged and sweeps < max_sweeps:
        sweeps += 1
        max_change = 0.0
        for j in range(d):
            c = curv[j]
            if c == 0.0:
                continue
            old = beta[j]
            new = soft_threshold(corr[j] + c * old, lam) / c
            if new != old:
                delta = new - old
                corr -= delta * gram[:, j]
                beta[j] = new
                max_change = max(max_change, abs(delta))
        history.append(objective(X, y, 0.0, beta, lam, scaling))
        converged = bool(max_change < tol)
    return beta, converged, sweeps, tuple(history)


def fit_lasso_arrays(X, y, cfg: LassoConfig = LassoConfig(), columns=None,
                     norm_stats=None) -> LassoModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X {X.shape} vs y {y.shape}")
    if len(y) < 2:
        raise ValueError("need at least 2 samples")
    _check_finite(X, y)
    x_mean = X.mean(axis=0)
    y_mean = float(np.mean(y))
    Xc = X - x_mean
    if cfg.lam > 0 and cfg.lam >= lambda_max(X, y, cfg.scaling):
        beta = np.zeros(X.shape[1])
        converged, sweeps = True, 0
        history = (objective(Xc, y - y_mean, 0.0, beta, cfg.lam, cfg.scaling),)
    else:
        beta, converged, sweeps, history = coordinate_descent(
            Xc, y - y_mean, cfg.lam, cfg.scaling, cfg.max_sweeps, cfg.tol)
    if not converged:
        warnings.warn(f"lasso did not converge in {cfg.max_sweeps} sweeps", stacklevel=2)
    intercept = y_mean - float(x_mean @ beta) if np.any(beta) else y_mean
    if columns is None:
        columns = tuple(f"x{j}" for j in range(X.shape[1]))
    return LassoModel(intercept=intercept, coefficients=beta, lam=cfg.lam,
                      columns=tuple(columns), converged=converged,
                      sweeps_used=sweeps, scaling=cfg.scaling,
                      norm_stats=norm_stats, objective_history=history)


def fit_lasso(table, cfg: LassoConfig = LassoConfig()) -> LassoModel:
    """Fit on a normalized :class:`~playervalue.features.FeatureTable`."""
    return fit_lasso_arrays(table.X, table.y, cfg, columns=table.columns,
                            norm_stats=table.norm_stats)


def predict_lasso(model: LassoModel, x) -> float | np.ndarray:
    """Prediction for one normalized row, or for each row of a matrix."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(model.coefficients):
        raise DimensionMismatch(
            f"expected {len(model.coefficients)} features, got {x.shape[-1]}")
    if x.ndim == 1:
        return model.intercept + float(x @ model.coefficients)
    return model.intercept + x @ model.coefficients


class LambdaChoice(NamedTuple):
    lam: float
    n_active: int
    reached: bool


def select_lambda_for_sparsity(table_or_X, y=None, target=(10, 15),
                               cfg: LassoConfig = LassoConfig(), iters=60
                               ) -> LambdaChoice:
    """Largest penalty whose active set size lies in ``target = (lo, hi)``.

    Bisects on ``log(lam)`` over ``(0, lambda_max]`` for the point where the
    active set shrinks below ``lo``. When no penalty lands inside the range,
    returns the one with the nearest count and ``reached=False``.
    """
    if y is None:
        X, y = table_or_X.X, table_or_X.y
    else:
        X = table_or_X
    lo, hi = target
    if lo > hi:
        raise ValueError("target range is empty")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    top = lambda_max(X, y, cfg.scaling)

    def count(lam):
        fit = fit_lasso_arrays(X, y, LassoConfig(lam, cfg.max_sweeps, cfg.tol, cfg.scaling))
        return int(np.count_nonzero(fit.coefficients))

    if lo <= 0:
        return LambdaChoice(top, 0, True)
    if top == 0.0:
        return LambdaChoice(0.0, 0, False)

    # upper end has 0 active; search for a lower end with >= lo active
    upper = math.log(top)
    lower = upper
    n_lower = 0
    for _ in range(40):
        lower -= math.log(10.0) / 2
        n_lower = count(math.exp(lower))
        if n_lower >= lo:
            break
    else:
        warnings.warn(f"no penalty reaches {lo} active features", stacklevel=2)
        return LambdaChoice(math.exp(lower), n_lower, False)

    for _ in range(iters):
        mid = 0.5 * (lower + upper)
        n_mid = count(math.exp(mid))
        if n_mid >= lo:
            lower, n_lower = mid, n_mid
        else:
            upper = mid
        if upper - lower < 1e-4:
            break
    if n_lower <= hi:
        return LambdaChoice(math.exp(lower), n_lower, True)
    warnings.warn(f"active-set size jumps past {hi}; using {n_lower}", stacklevel=2)
    return LambdaChoice(math.exp(lower), n_lower, False)


def age_curve(model: LassoModel, ages=range(16, 41)) -> tuple[np.ndarray, np.ndarray]:
    """Predicted log value against age with every other standardized feature at 0.

    Needs the model's ``norm_stats`` and ``age`` / ``age_sq`` columns.
    """
    if model.norm_stats is None:
        raise ValueError("model carries no normalization statistics")
    ages = np.asarray(list(ages), dtype=float)
    out = np.full(len(ages), float(model.intercept))
    for name, raw in (("age", ages), ("age_sq", ages * ages)):
        j = model.columns.index(name)
        mean, scale = model.norm_stats[j]
        out += model.coefficients[j] * (raw - mean) / scale
    return ages, out
