import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import corpus_of, profile, stats_row
from oracles import kendall_tau_pairs
from playervalue.errors import EmptyTable, ItemSetMismatch
from playervalue.lasso import LassoConfig, fit_lasso
from playervalue.ranking import (POSITION_COLUMNS, YOUNG_COLUMNS, build_young_table,
                                 kendall_tau, kendall_tau_on_reference, nearest_valuation,
                                 rank_players, rank_predictions, read_reference_ranking,
                                 reference_date)
from playervalue.features import FeatureBuilder
from playervalue.ingest import ValuationSnapshot

pytestmark = pytest.mark.filterwarnings("ignore:YOUNG")

DAY = dt.timedelta(days=1)
PLAY = stats_row(total_minutes_on_field=90, total_matches=1, total_passes=30,
                 total_successful_passes=24)


def test_tau_matches_pair_counting_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        a, b = rng.permutation(n).tolist(), rng.permutation(n).tolist()
        assert kendall_tau(a, b) == kendall_tau_pairs(a, b)


def test_tau_examples():
    assert kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3, abs=1e-15)
    items = list("abcdefg")
    assert kendall_tau(items, items) == 1.0
    assert kendall_tau(items, items[::-1]) == -1.0


@settings(max_examples=100, deadline=None)
@given(st.permutations(range(12)), st.permutations(range(12)))
def test_tau_is_symmetric(a, b):
    assert kendall_tau(a, b) == kendall_tau(b, a)
    assert -1.0 <= kendall_tau(a, b) <= 1.0


def test_tau_rejects_different_items():
    with pytest.raises(ItemSetMismatch):
        kendall_tau([1, 2, 3], [1, 2, 4])
    with pytest.raises(ItemSetMismatch):
        kendall_tau([1, 1, 2], [1, 2, 1])
    with pytest.raises(ValueError):
        kendall_tau([1], [1])


def test_tau_on_reference_subset():
    predicted = [9, 3, 7, 1, 5, 2]
    assert kendall_tau_on_reference(predicted, [3, 1, 2]) == 1.0
    assert kendall_tau_on_reference(predicted, [2, 1, 3]) == -1.0
    with pytest.raises(ItemSetMismatch):
        kendall_tau_on_reference(predicted, [3, 4])


def test_ranking_order_and_ties():
    report = rank_predictions([5, 2, 9, 4], [15.0, 16.0, 15.0, 14.0], {2: "B", 5: "A"})
    assert report.player_ids() == [2, 5, 9, 4]
    assert [e.rank for e in report.entries] == [1, 2, 3, 4]
    assert report.entries[0].name == "B"
    assert report.entries[2].name == "9"
    assert report.entries[0].predicted_value == pytest.approx(math.exp(16.0))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-5000, 5000), min_size=1, max_size=30))
def test_ranking_invariant_under_increasing_transforms(milli):
    # a millesimal grid keeps distinct values distinct after exp
    preds = np.asarray(milli) / 1000.0
    pids = list(range(len(preds)))
    log_space = rank_predictions(pids, preds, {}).player_ids()
    currency = np.exp(np.asarray(preds))
    assert rank_predictions(pids, currency, {}).player_ids() == log_space
    assert rank_predictions(pids, 3 * preds + 1, {}).player_ids() == log_space


def test_nearest_valuation_tolerance_and_ties():
    when = dt.date(2022, 1, 1)
    snaps = [ValuationSnapshot(1, when - 10 * DAY, 1.0),
             ValuationSnapshot(1, when + 10 * DAY, 2.0)]
    assert nearest_valuation(snaps, when, 90).market_value == 1.0
    assert nearest_valuation(snaps, when, 5) is None
    assert nearest_valuation(snaps, when + 100 * DAY, 90).market_value == 2.0
    assert nearest_valuation(snaps, when + 101 * DAY, 90) is None


def young_corpus():
    birth = dt.date(1999, 5, 1)
    matches = [
        (1, dt.date(2021, 4, 20), "D1", PLAY),
        (1, dt.date(2021, 4, 28), "D2", PLAY),   # second division
        (1, dt.date(2021, 5, 1), "D1", PLAY),    # on the 22nd birthday
        (1, dt.date(2020, 4, 20), "D1", PLAY),   # just outside (t - 365, t]
        (1, dt.date(2020, 4, 21), "D1", PLAY),
        (2, dt.date(2021, 4, 20), "D1", 2 * PLAY),
        (3, dt.date(2021, 4, 20), "D1", 3 * PLAY),
        (4, dt.date(2021, 4, 20), "D1", PLAY),
    ]
    values = [(1, dt.date(2022, 4, 20), 2e6), (2, dt.date(2022, 6, 1), 3e6),
              (3, dt.date(2022, 9, 1), 4e6), (4, dt.date(2022, 4, 1), 1e6)]
    profiles = [profile(1, ("Left Winger", "Centre-Forward"), league="D1", birth=birth),
                profile(2, ("Left Back",), league="D1", birth=birth),
                profile(3, ("Goalkeeper",), league="D1", birth=birth),
                profile(4, ("Left Back",), league="D1", birth=birth)]
    return corpus_of(matches, values, profiles)


def test_reference_date_is_last_first_division_match_before_22():
    builder = FeatureBuilder(young_corpus())
    assert reference_date(builder, 1, {"D1"}) == dt.date(2021, 4, 20)
    assert reference_date(builder, 1, {"D1", "D2"}) == dt.date(2021, 4, 28)
    assert reference_date(builder, 1, {"D3"}) is None


def test_young_table():
    table = build_young_table(young_corpus(), {"D1"})
    assert table.columns == YOUNG_COLUMNS
    # player 3's nearest snapshot is 134 days past t + 1 year
    assert table.player_ids.tolist() == [1, 2, 4]
    onehot = table.raw[:, [table.columns.index(c) for c in POSITION_COLUMNS]]
    assert onehot[0].tolist() == [0, 0, 0, 0, 0, 0, 1, 1]
    assert onehot[1].tolist() == [0, 1, 0, 0, 0, 0, 0, 0]
    # player 1 counts matches on 2020-04-21 and 2021-04-20 only
    assert table.raw[0, table.columns.index("total_matches")] == 2
    assert table.y[0] == pytest.approx(math.log(2e6))
    assert table.target_dates[0] == dt.date(2021, 4, 20)


def test_young_table_without_targets():
    table = build_young_table(young_corpus(), {"D1"}, require_target=False)
    assert table.player_ids.tolist() == [1, 2, 3, 4]
    assert np.isnan(table.y[2])
    with pytest.raises(EmptyTable):
        build_young_table(young_corpus(), {"D3"})


def test_rank_players_uses_model_scaling():
    corpus = young_corpus()
    train = build_young_table(corpus, {"D1"})
    model = fit_lasso(train, LassoConfig(lam=1e-3))
    everyone = build_young_table(corpus, {"D1"}, require_target=False)
    report = rank_players(model, everyone, {1: "One"})
    assert sorted(report.player_ids()) == [1, 2, 3, 4]
    ranked = rank_players(model, train, {})
    trained = {e.player_id: e.predicted_value for e in ranked.entries}
    full = {e.player_id: e.predicted_value for e in report.entries}
    for pid in trained:
        assert full[pid] == pytest.approx(trained[pid], rel=1e-12)
    assert report.to_dict()["kendall_tau"] is None
    assert "One" in report.to_text(top=4)


def test_read_reference_ranking(tmp_path):
    path = tmp_path / "ref.csv"
    path.write_text("# jury\nrank,player_id\n2,7\n1,4\n3,9\n")
    assert read_reference_ranking(path) == [4, 7, 9]
    path.write_text("rank,player_id\n1,7\n1,4\n")
    with pytest.raises(ValueError):
        read_reference_ranking(path)
