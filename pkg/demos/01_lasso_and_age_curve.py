"""Lasso on one position table: sparsity-targeted penalty and the age curve.

Run: python3 demos/01_lasso_and_age_curve.py
"""

import warnings

import numpy as np

from playervalue import (LassoConfig, SynthSpec, age_curve, build_position_tables, fit_lasso,
                         generate_synthetic, select_lambda_for_sparsity)
from playervalue.lasso import lambda_max
from playervalue.synth import BELL_AGE_COEFFICIENTS

warnings.simplefilter("ignore")  # degenerate goalkeeper columns in outfield tables

# A synthetic corpus of forwards whose log value peaks at 24 years.
spec = SynthSpec(n_players=1500, seed=0, true_coefficients=BELL_AGE_COEFFICIENTS,
                 noise_sd=0.3, league_sd=0.2, intercept=0.0,
                 position_weights={"FWD": 1.0})
data = generate_synthetic(spec)
table = build_position_tables(data.corpus, positions=("FWD",))["FWD"]
print(f"FWD table: {table.n_samples} players x {len(table.columns)} features")

# The penalty that keeps between 10 and 15 features.
choice = select_lambda_for_sparsity(table, target=(10, 15))
model = fit_lasso(table, LassoConfig(lam=choice.lam))
print(f"lambda {choice.lam:.4g} keeps {choice.n_active} features:")
for name, coef in zip(table.columns, model.coefficients):
    if coef:
        print(f"  {name:<40} {coef:+.4f}")

# A strong penalty keeps only age_sq, with a negative sign.
big = fit_lasso(table, LassoConfig(lam=0.5 * lambda_max(table.X, table.y)))
print("large lambda active set:", big.active_set)

# A tiny penalty recovers the bell: log value against age, other features at 0.
tiny = fit_lasso(table, LassoConfig(lam=1e-4, max_sweeps=20000))
ages, curve = age_curve(tiny)
print("\nage  log value")
for a, v in zip(ages, curve):
    print(f"{a:>3.0f}  {v:7.3f}  {'#' * int(40 * (v - curve.min()) / np.ptp(curve))}")
print(f"peak at {ages[np.argmax(curve)]:.0f}")
