"""One-year-ahead values for players under 22, ranked and compared with a reference.

Run: python3 demos/04_young_player_ranking.py
"""

import warnings

import numpy as np

from playervalue import (LassoConfig, SynthSpec, build_young_table, fit_lasso,
                         generate_synthetic, kendall_tau, rank_players)
from playervalue.ranking import kendall_tau_on_reference

warnings.simplefilter("ignore")

data = generate_synthetic(SynthSpec(n_players=2000, seed=2))
leagues = data.first_division

# Train on players with a valuation about a year after their reference date,
# then rank every young player, including those still without one.
train = build_young_table(data.corpus, leagues)
everyone = build_young_table(data.corpus, leagues, require_target=False)
print(f"{train.n_samples} training rows, {everyone.n_samples} players to rank")

model = fit_lasso(train, LassoConfig(lam=0.01))
names = {pid: p.name for pid, p in data.corpus.profiles.items()}
report = rank_players(model, everyone, names)
print(report.to_text(top=13))

# A stand-in jury: the ten players with the highest planted signal.
by_signal = sorted(everyone.player_ids.tolist(), key=lambda p: -data.signal[p])
jury = by_signal[:10]
print("tau on the jury's ten:", round(kendall_tau_on_reference(report.player_ids(), jury), 3))
print("tau over everyone:   ", round(kendall_tau(report.player_ids(), by_signal), 3))
top13 = set(report.player_ids()[:13])
print(f"{len(top13 & set(jury))} of the jury's ten are in the predicted top 13")
