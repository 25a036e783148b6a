"""Five-fold cross-validated R² for both models, with and without the league feature.

Run: python3 demos/03_cross_validation.py   (about a minute)
"""

import warnings

from playervalue import (ForestConfig, LassoConfig, SynthSpec, build_position_tables,
                         cross_validate, generate_synthetic, select_lambda_for_sparsity)
from playervalue.features import LEAGUE_FEATURE

warnings.simplefilter("ignore")

# Signal explains 55% of the variance of the log value.
data = generate_synthetic(SynthSpec(n_players=3000, seed=1, signal_fraction=0.55,
                                    position_weights={"MD": 1.0}))
print(f"planted R² over all players: {data.true_r2:.3f}")
table = build_position_tables(data.corpus, positions=("MD",))["MD"]

print(f"\n{'features':<16}{'model':<8}{'lambda':>10}{'mse':>8}{'R²':>8}")
for label, t in (("with league", table),
                 ("without league", table.drop_columns([LEAGUE_FEATURE]))):
    lam = select_lambda_for_sparsity(t, target=(10, 15)).lam
    for spec in (LassoConfig(lam=lam), ForestConfig(n_trees=50, seed=0)):
        rep = cross_validate(t, spec, k=5, seed=0, full_fit=False)
        shown = f"{rep.lam:.4f}" if rep.lam is not None else "-"
        print(f"{label:<16}{rep.model_kind:<8}{shown:>10}{rep.mse_cv:8.3f}{rep.r2_cv:8.3f}")
