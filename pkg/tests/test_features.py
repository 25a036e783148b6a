import datetime as dt
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from playervalue.errors import EmptyTable, NoPlayingTime
from playervalue.features import (BASE_COLUMNS, LEAGUE_FEATURE, RATIO_NAMES, FeatureBuilder,
                                  WindowSpec, aggregate_window, apply_norm_stats,
                                  augment_features, build_position_tables, normalize_column,
                                  ratio_features, write_feature_table)
from playervalue.schema import STAT_INDEX, UNBOUNDED_RATIOS
from playervalue.synth import SynthSpec, generate_synthetic

from builders import corpus_of, profile, stats_row

T = dt.date(2022, 1, 1)


def one_player(match_dates, **stats):
    matches = [(1, d, "L", stats_row(total_minutes_on_field=90, total_matches=1, **stats))
               for d in match_dates]
    return corpus_of(matches, [(1, T, 1e6)], [profile(1)])


def test_goals_per_minute():
    corpus = corpus_of(
        [(1, T - dt.timedelta(days=800), "L",
          stats_row(total_minutes_on_field=90, total_goals=1)),
         (1, T - dt.timedelta(days=900), "L",
          stats_row(total_minutes_on_field=90, total_goals=2))],
        [(1, T, 1e6)], [profile(1)])
    agg = aggregate_window(corpus, 1, T)
    assert agg.sums["total_goals"] == 3
    assert agg.rates["total_goals"] == pytest.approx(3 / 180, abs=1e-15)


def test_window_boundaries_are_half_open():
    day = dt.timedelta(days=1)
    corpus = one_player([T - 730 * day, T - 731 * day, T - 1460 * day, T - 1461 * day])
    agg = aggregate_window(corpus, 1, T)
    # t-731 and t-1460 are inside; t-730 and t-1461 are outside
    assert agg.sums["total_matches"] == 2


def test_no_playing_time():
    corpus = corpus_of([(1, T - dt.timedelta(days=800), "L", stats_row(total_matches=1))],
                       [(1, T, 1e6)], [profile(1)])
    with pytest.raises(NoPlayingTime):
        aggregate_window(corpus, 1, T)


def test_ratio_examples():
    r = ratio_features({"total_passes": 100, "total_successful_passes": 80,
                        "total_minutes_on_field": 900, "total_matches": 10})
    assert r["ratio_passes"] == pytest.approx(0.8)
    assert r["ratio_penalties"] == 0.0
    assert r["ratio_minutes"] == pytest.approx(90.0)
    assert len(RATIO_NAMES) == 37


def test_augment_age_and_flags():
    corpus = one_player([T - dt.timedelta(days=800)])
    prof = profile(1, youth_club="La Masia", youth_top20=True, height=180.0)
    out = augment_features({"total_goals": 0.01}, prof, corpus, T)
    assert out["age"] == pytest.approx(22.0, abs=2e-3)
    assert out["age_sq"] == pytest.approx(484.0, abs=0.1)
    assert out["height_sq"] == 180.0 ** 2
    assert out["is_top_20"] == 1.0
    assert out["total_goals_sq"] == pytest.approx(1e-4)


def test_league_value_is_log_of_member_mean():
    day = dt.timedelta(days=1)
    corpus = corpus_of(
        [(1, T - 800 * day, "L", stats_row(total_minutes_on_field=90))],
        # player 2's later value is after t and must be ignored
        [(1, T - 10 * day, 5e5), (1, T, 1e6), (2, T - 5 * day, 3e6), (2, T + day, 9e9)],
        [profile(1), profile(2)])
    out = augment_features({}, corpus.profiles[1], corpus, T)
    assert out[LEAGUE_FEATURE] == pytest.approx(math.log(2e6), rel=1e-14)


def test_normalize_examples():
    x, degenerate = normalize_column([1, 2, 3])
    np.testing.assert_allclose(x, [-1 / 3, 0, 1 / 3], atol=1e-15)
    assert not degenerate
    x, _ = normalize_column([5, 5])
    np.testing.assert_array_equal(x, [0, 0])
    x, degenerate = normalize_column([0, 0, 0])
    np.testing.assert_array_equal(x, [0, 0, 0])
    assert degenerate


def test_positions_and_target():
    day = dt.timedelta(days=1)
    s = stats_row(total_minutes_on_field=90, total_matches=1, total_goals=1)
    corpus = corpus_of(
        [(1, T - 800 * day, "L", s), (2, T - 800 * day, "L", 2 * s),
         (3, T - 800 * day, "L", 3 * s), (4, T - 900 * day, "L", s)],
        [(1, T, 4059712.0), (2, T, 1e6), (3, T, 2e6), (4, T, 3e6)],
        [profile(1, ("Left Back",)), profile(2, ("Left Back",)),
         profile(3, ("Left Winger", "Centre-Forward")),
         profile(4, ("Left Winger", "Centre-Forward"))])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tables = build_position_tables(corpus, positions=("FB", "WG", "FWD"))
        with pytest.raises(EmptyTable):
            build_position_tables(corpus, positions=("GK",))
    assert tables["FB"].player_ids.tolist() == [1, 2]
    assert tables["FB"].y[0] == pytest.approx(15.2166, abs=1e-4)
    assert sorted(tables["WG"].player_ids.tolist()) == [3, 4]
    np.testing.assert_array_equal(tables["WG"].raw, tables["FWD"].raw)


@pytest.fixture(scope="module")
def synthetic():
    return generate_synthetic(SynthSpec(n_players=300, seed=2))


@pytest.fixture(scope="module")
def tables(synthetic):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_position_tables(synthetic.corpus)


def test_normalized_columns_are_centred(tables):
    for table in tables.values():
        for j, kind in enumerate(table.kinds):
            if kind != "boolean":
                assert abs(table.X[:, j].mean()) < 1e-9


def test_stored_stats_reproduce_X(tables):
    for table in tables.values():
        assert np.array_equal(apply_norm_stats(table.raw, table.norm_stats), table.X)


def test_ratio_ranges(tables):
    for table in tables.values():
        for name in RATIO_NAMES:
            col = table.raw[:, table.columns.index(name)]
            if name == "ratio_minutes":
                assert col.min() >= 0 and col.max() <= 130
            elif name not in UNBOUNDED_RATIOS:
                assert col.min() >= 0 and col.max() <= 1 + 1e-12, name


def test_row_count_matches_position_multiplicity(synthetic, tables):
    from playervalue.schema import load_position_aliases
    from playervalue.features import position_codes
    aliases = load_position_aliases()
    builder = FeatureBuilder(synthetic.corpus)
    expected = 0
    for pid, prof in synthetic.corpus.profiles.items():
        target = builder.valuations[pid][-1].value_date
        start, end = WindowSpec().bounds(target)
        if builder.window_sums(pid, start, end)[STAT_INDEX["total_minutes_on_field"]] > 0:
            expected += len(position_codes(prof, aliases))
    assert sum(t.n_samples for t in tables.values()) == expected


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=10), st.data())
def test_window_aggregation_is_additive(goals, data):
    day = dt.timedelta(days=1)
    matches = [(1, T - (740 + 7 * i) * day, "L",
                stats_row(total_minutes_on_field=90, total_goals=g))
               for i, g in enumerate(goals)]
    mask = data.draw(st.lists(st.booleans(), min_size=len(goals), max_size=len(goals)))
    builder = FeatureBuilder(corpus_of(matches, [(1, T, 1.0)], [profile(1)]))
    start, end = WindowSpec().bounds(T)
    full = builder.window_sums(1, start, end)
    parts = np.zeros_like(full)
    for keep in (True, False):
        chosen = [m for m, k in zip(matches, mask) if k == keep]
        if chosen:
            b = FeatureBuilder(corpus_of(chosen, [(1, T, 1.0)], [profile(1)]))
            parts += b.window_sums(1, start, end)
    np.testing.assert_array_equal(parts, full)


def test_feature_csv_layout(tmp_path, tables):
    table = tables["MD"]
    path = tmp_path / "features_MD.csv"
    write_feature_table(table, path, header="# h\n")
    lines = path.read_text().splitlines()
    assert lines[0] == "# h"
    assert lines[1].split(",") == [*BASE_COLUMNS, "y", "player_id"]
    assert len(lines) == table.n_samples + 2
    first = lines[2].split(",")
    assert float(first[-2]) == table.y[0]
    assert int(first[-1]) == table.player_ids[0]
