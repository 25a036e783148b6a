import warnings

import numpy as np
import pytest

from playervalue.features import WindowSpec, build_position_tables
from playervalue.ingest import join_corpus, load_corpus, read_club_list, write_corpus
from playervalue.lasso import LassoConfig, age_curve, fit_lasso
from playervalue.schema import BOUNDED_PAIRS, STAT_INDEX
from playervalue.synth import BELL_AGE_COEFFICIENTS, SynthSpec, generate_synthetic


def quiet_tables(corpus, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_position_tables(corpus, **kw)


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(noise_sd=-0.1)
    with pytest.raises(ValueError):
        SynthSpec(true_coefficients={"log_league_avg_value": 1.0})
    with pytest.raises(ValueError):
        SynthSpec(true_coefficients={"total_flying_kicks": 1.0})
    with pytest.raises(ValueError):
        SynthSpec.from_dict({"n_players": 5, "colour": "red"})
    assert SynthSpec.from_dict({"n_players": 5, "window": {"horizon_days": 10}}).window \
        == WindowSpec(10, 730)


def test_generated_corpus_passes_ingest(tmp_path):
    data = generate_synthetic(SynthSpec(n_players=80, seed=1))
    m = data.corpus.matches
    stats = m.stats
    for ok, attempted in BOUNDED_PAIRS:
        assert np.all(stats[:, STAT_INDEX[ok]] <= stats[:, STAT_INDEX[attempted]])
    assert stats[:, STAT_INDEX["total_minutes_on_field"]].max() <= 130
    assert stats.min() >= 0
    # the parsers re-check every invariant
    write_corpus(data.corpus, tmp_path, data.top20_clubs)
    corpus, _ = load_corpus(tmp_path / "matches.csv", tmp_path / "values.csv",
                            tmp_path / "profiles.csv",
                            read_club_list(tmp_path / "top20_clubs.txt"))
    assert corpus == data.corpus
    joined, report = join_corpus(corpus.matches, corpus.valuations, corpus.profiles)
    assert report.kept == 80


def test_same_seed_same_corpus():
    a = generate_synthetic(SynthSpec(n_players=40, seed=9))
    b = generate_synthetic(SynthSpec(n_players=40, seed=9))
    c = generate_synthetic(SynthSpec(n_players=40, seed=10))
    assert a.corpus == b.corpus
    assert a.corpus != c.corpus


def test_noiseless_target_is_linear_in_planted_features():
    spec = SynthSpec(n_players=150, seed=4, noise_sd=0.0)
    data = generate_synthetic(spec)
    assert data.true_r2 == pytest.approx(1.0)
    for table in quiet_tables(data.corpus).values():
        fitted = np.full(table.n_samples, spec.intercept)
        for name, coef in spec.true_coefficients.items():
            fitted += coef * table.raw[:, table.columns.index(name)]
        league = np.array([data.league_offsets[data.corpus.profiles[p].league_id]
                           for p in table.player_ids])
        np.testing.assert_allclose(table.y, fitted + league, rtol=0, atol=1e-9)


def test_signal_fraction_sets_noise():
    data = generate_synthetic(SynthSpec(n_players=3000, seed=0, signal_fraction=0.5))
    assert data.true_r2 == pytest.approx(0.5, abs=0.05)


def test_bell_shaped_age_is_recovered_with_tiny_lambda():
    spec = SynthSpec(n_players=1000, seed=0, true_coefficients=BELL_AGE_COEFFICIENTS,
                     noise_sd=0.3, league_sd=0.2, position_weights={"FWD": 1.0})
    table = quiet_tables(generate_synthetic(spec).corpus, positions=("FWD",))["FWD"]
    model = fit_lasso(table, LassoConfig(lam=1e-4, max_sweeps=20000))
    assert model.coefficients[table.columns.index("age_sq")] < 0
    ages, curve = age_curve(model)
    assert 18 < ages[np.argmax(curve)] < 32
