"""Future market-value regression for football players.

Lasso and random-forest estimators, the feature pipeline that feeds them,
cross-validation, young-player ranking and a seeded synthetic corpus.
"""

from .evaluation import CVReport, cross_validate, grid_search, kfold_split
from .features import FeatureTable, WindowSpec, build_position_tables
from .forest import ForestConfig, ForestModel, fit_forest, predict_forest
from .ingest import (Corpus, join_corpus, load_corpus, parse_matches, parse_profiles,
                     parse_valuations)
from .lasso import (LassoConfig, LassoModel, age_curve, fit_lasso, predict_lasso,
                    select_lambda_for_sparsity)
from .ranking import build_young_table, kendall_tau, rank_players
from .synth import SynthSpec, generate_synthetic, generate_synthetic_corpus
from .trees import TreeConfig, fit_tree, predict_tree

__version__ = "0.1.0"
