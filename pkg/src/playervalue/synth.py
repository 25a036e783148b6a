"""Seeded synthetic corpora with a planted log-value model.

Stand-in for the proprietary match and valuation data. Each player gets a
position, a league, a birth date, a target date ``T`` and a run of matches
whose per-game counts respect the schema bounds. The log market value at
``T`` is a linear model in the engineered features computed exactly as the
feature pipeline computes them, plus a latent per-league offset and Gaussian
noise, so the attainable R² is known in advance.
"""

from __future__ import annotations

import datetime as dt
import math
from collections.abc import Mapping
from dataclasses import dataclass, field, fields

import numpy as np

from .features import BASE_COLUMNS, LEAGUE_FEATURE, FeatureBuilder, WindowSpec
from .ingest import Corpus, MatchTable, PlayerProfile, ValuationSnapshot
from .schema import (BOUNDED_PAIRS, POSITION_CODES, STAT_INDEX, STAT_NAMES,
                     TOTAL_ACTIONS, load_position_aliases)

# Planted on columns whose (x - mean) / max scaling keeps a usable spread;
# per-minute rates are dominated by short-minute outliers after that scaling.
DEFAULT_COEFFICIENTS = {
    "age": -0.05,
    "total_minutes_on_field": 0.0004,
    "ratio_passes": 1.5,
    "is_top_20": 0.6,
}

# Value peaking at 24 years.
BELL_AGE_COEFFICIENTS = {"age": 1.2, "age_sq": -0.025, "is_top_20": 0.3}

_CONTINUOUS_STATS = frozenset({"total_xg_shot", "total_xg_assist", "total_xg_save"})
_SKILL_STATS = ("total_touch_in_box", "total_passes", "total_goals",
                "total_shots", "total_dribbles", "total_key_passes")


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic corpus parameters.

    ``true_coefficients`` maps raw (unnormalized) feature names to planted
    coefficients. When ``signal_fraction`` is set it overrides ``noise_sd``
    so that ``Var(signal) / Var(target)`` equals it over the generated
    players.
    """

    n_players: int = 2000
    n_leagues: int = 12
    seed: int = 0
    true_coefficients: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_COEFFICIENTS))
    noise_sd: float = 0.5
    signal_fraction: float | None = None
    intercept: float = 14.0
    league_sd: float = 1.3
    position_weights: Mapping[str, float] | None = None
    top20_fraction: float = 0.15
    first_division_fraction: float = 0.7
    min_window_matches: int = 5
    max_window_matches: int = 20
    snapshot_spacing_days: int = 180
    window: WindowSpec = WindowSpec()

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if self.signal_fraction is not None and not 0 < self.signal_fraction <= 1:
            raise ValueError("signal_fraction must be in (0, 1]")
        if self.n_players < 1 or self.n_leagues < 1:
            raise ValueError("need at least one player and one league")
        if not 1 <= self.min_window_matches <= self.max_window_matches:
            raise ValueError("bad window match counts")
        for name in self.true_coefficients:
            if name == LEAGUE_FEATURE:
                raise ValueError("the league feature is derived from the generated "
                                 "valuations and cannot carry a planted coefficient")
            if name not in BASE_COLUMNS:
                raise ValueError(f"unknown feature {name!r}")
        if self.position_weights is not None:
            unknown = set(self.position_weights) - set(POSITION_CODES)
            if unknown:
                raise ValueError(f"unknown position codes {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "SynthSpec":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown synth keys {sorted(extra)}")
        data = dict(data)
        if "window" in data and not isinstance(data["window"], WindowSpec):
            data["window"] = WindowSpec(**data["window"])
        return cls(**data)


@dataclass(frozen=True)
class SyntheticData:
    corpus: Corpus
    top20_clubs: frozenset
    first_division: frozenset
    league_offsets: dict
    signal: dict           # player_id -> planted log-value without noise
    log_value: dict        # player_id -> log value at the target date
    noise_sd: float

    @property
    def true_r2(self) -> float:
        ids = sorted(self.signal)
        s = np.array([self.signal[i] for i in ids])
        y = np.array([self.log_value[i] for i in ids])
        return float(np.var(s) / np.var(y))


def _stat_order():
    """Stats ordered so that every bounded part comes after its whole."""
    whole_of = dict(BOUNDED_PAIRS)
    done, order = set(), []
    pending = [s for s in STAT_NAMES if s != TOTAL_ACTIONS]
    while pending:
        rest = []
        for s in pending:
            w = whole_of.get(s)
            if w is None or w == TOTAL_ACTIONS or w in done:
                order.append(s)
                done.add(s)
            else:
                rest.append(s)
        if len(rest) == len(pending):
            raise RuntimeError("cyclic stat bounds")
        pending = rest
    return order, whole_of


_ORDER, _WHOLE_OF = _stat_order()


def _label_for_code(aliases):
    out = {}
    for label, code in sorted(aliases.items()):
        out.setdefault(code, label)
    return out


def _draw_stats(rng, minutes, pos_idx, skill, rates, success):
    """Per-game stat matrix for matches with the given minutes and positions."""
    m = len(minutes)
    stats = np.zeros((m, len(STAT_NAMES)))
    stats[:, STAT_INDEX["total_matches"]] = 1.0
    stats[:, STAT_INDEX["total_minutes_on_field"]] = minutes
    scale = minutes / 90.0
    for name in _ORDER:
        j = STAT_INDEX[name]
        if name in ("total_matches", "total_minutes_on_field"):
            continue
        whole = _WHOLE_OF.get(name)
        if name == "total_gk_clean_sheets":
            stats[:, j] = rng.random(m) < success[pos_idx, j] * 0.5
        elif whole is not None and whole != TOTAL_ACTIONS:
            stats[:, j] = rng.binomial(stats[:, STAT_INDEX[whole]].astype(np.int64),
                                       success[pos_idx, j])
        elif name in _CONTINUOUS_STATS:
            lam = rates[pos_idx, j] * scale * skill[:, 0]
            stats[:, j] = np.round(rng.gamma(2.0, lam / 2.0), 4)
        else:
            lam = rates[pos_idx, j] * scale
            if name in _SKILL_STATS:
                lam = lam * skill[:, _SKILL_STATS.index(name) % skill.shape[1]]
            stats[:, j] = rng.poisson(lam)
    stats[:, STAT_INDEX[TOTAL_ACTIONS]] = (stats[:, STAT_INDEX["total_defensive_actions"]]
                                           + stats[:, STAT_INDEX["total_attacking_actions"]])
    return stats


def generate_synthetic(spec: SynthSpec = SynthSpec(), aliases=None) -> SyntheticData:
    """Generate a corpus and the ground truth behind it."""
    rng = np.random.default_rng(spec.seed)
    aliases = aliases if aliases is not None else load_position_aliases()
    label_of = _label_for_code(aliases)
    n = spec.n_players

    leagues = [f"L{j:02d}" for j in range(spec.n_leagues)]
    offsets = rng.normal(0.0, spec.league_sd, size=spec.n_leagues)
    first_div = rng.random(spec.n_leagues) < spec.first_division_fraction
    first_div[int(np.argmax(offsets))] = True
    clubs = [f"Club {k:03d}" for k in range(60)]
    top20 = frozenset(clubs[:20])

    weights = np.ones(len(POSITION_CODES))
    if spec.position_weights is not None:
        weights = np.array([spec.position_weights.get(c, 0.0) for c in POSITION_CODES])
    weights = weights / weights.sum()

    # position-level per-90 rates and success probabilities for every stat
    rates = np.exp(rng.normal(0.5, 0.8, size=(len(POSITION_CODES), len(STAT_NAMES))))
    gk = POSITION_CODES.index("GK")
    for name in STAT_NAMES:
        if "_gk_" in name or name in ("total_goal_kicks", "total_xg_save"):
            rates[:, STAT_INDEX[name]] *= 0.01
            rates[gk, STAT_INDEX[name]] *= 300.0
    rates[:, STAT_INDEX["total_xg_shot"]] = 0.15
    rates[:, STAT_INDEX["total_xg_assist"]] = 0.1
    success = rng.uniform(0.3, 0.9, size=(len(POSITION_CODES), len(STAT_NAMES)))

    epoch = dt.date(2020, 1, 1)
    span = (dt.date(2022, 3, 31) - epoch).days
    profiles, pos_of, target_date = {}, {}, {}
    pid_rows, date_rows, league_rows, minute_rows, skill_rows = [], [], [], [], []
    for i in range(n):
        pid = 1000 + i
        code = int(rng.choice(len(POSITION_CODES), p=weights))
        league = int(rng.integers(spec.n_leagues))
        T = epoch + dt.timedelta(days=int(rng.integers(span + 1)))
        age = rng.uniform(17.0, 36.0)
        birth = T - dt.timedelta(days=int(round(age * 365.25)))
        youth = clubs[int(rng.integers(20))] if rng.random() < spec.top20_fraction \
            else clubs[20 + int(rng.integers(40))]
        codes = [code]
        if rng.random() < 0.1:
            codes.append(int(rng.integers(len(POSITION_CODES))))
        profiles[pid] = PlayerProfile(
            player_id=pid, name=f"Player {pid}", birth_date=birth,
            positions=frozenset(label_of[POSITION_CODES[c]] for c in codes),
            league_id=leagues[league], youth_club=youth,
            height=float(np.round(rng.normal(181.0, 7.0), 1)),
            youth_top20=youth in top20)
        pos_of[pid] = code
        target_date[pid] = T

        start, end = spec.window.bounds(T)
        k_in = int(rng.integers(spec.min_window_matches, spec.max_window_matches + 1))
        k_out = int(rng.integers(0, 6))
        window_len = (end - start).days
        offs_in = rng.choice(window_len, size=k_in, replace=False)
        days = [start + dt.timedelta(days=int(o)) for o in offs_in]
        # a few matches after the window, usable by the young-player pipeline
        days += [end + dt.timedelta(days=int(o))
                 for o in rng.choice((T - end).days, size=k_out, replace=False)]
        days = sorted(set(days))
        skill = np.exp(rng.normal(0.0, 0.35, size=3))
        for d in days:
            pid_rows.append(pid)
            date_rows.append(np.datetime64(d, "D"))
            league_rows.append(leagues[league])
            minute_rows.append(float(rng.integers(1, 96)))
            skill_rows.append(skill)

    pos_idx = np.array([pos_of[p] for p in pid_rows])
    stats = _draw_stats(rng, np.array(minute_rows), pos_idx,
                        np.array(skill_rows), rates, success)
    matches = MatchTable(pid_rows, date_rows, league_rows, stats)

    # planted signal on raw engineered features
    coef_idx = [(BASE_COLUMNS.index(k), float(v))
                for k, v in sorted(spec.true_coefficients.items())]
    builder = FeatureBuilder(Corpus(matches, (), profiles))
    league_index = {name: j for j, name in enumerate(leagues)}
    signal = {}
    for pid, prof in profiles.items():
        T = target_date[pid]
        start, end = spec.window.bounds(T)
        row = builder.feature_row(pid, T, start, end)
        s = spec.intercept + offsets[league_index[prof.league_id]]
        s += sum(c * row[j] for j, c in coef_idx)
        signal[pid] = float(s)

    ids = sorted(profiles)
    sig = np.array([signal[p] for p in ids])
    noise_sd = spec.noise_sd
    if spec.signal_fraction is not None:
        s = spec.signal_fraction
        noise_sd = math.sqrt(np.var(sig) * (1.0 - s) / s)
    noise = rng.normal(0.0, 1.0, size=len(ids)) * noise_sd
    log_value = {p: float(v) for p, v in zip(ids, sig + noise)}

    valuations = []
    for p in ids:
        T = target_date[p]
        valuations.append(ValuationSnapshot(p, T, math.exp(log_value[p])))
        # earlier snapshots drift back from the final value
        drift = 0.0
        k = 1
        while True:
            d = T - dt.timedelta(days=k * spec.snapshot_spacing_days
                                 + int(rng.integers(-20, 21)))
            if d <= profiles[p].birth_date + dt.timedelta(days=365 * 16):
                break
            if k * spec.snapshot_spacing_days > 4 * 365:
                break
            drift += rng.normal(0.0, 0.1)
            valuations.append(ValuationSnapshot(p, d, math.exp(log_value[p] + drift)))
            k += 1

    corpus = Corpus(matches, tuple(sorted(valuations)), profiles)
    return SyntheticData(
        corpus=corpus, top20_clubs=top20,
        first_division=frozenset(l for l, f in zip(leagues, first_div) if f),
        league_offsets=dict(zip(leagues, offsets.tolist())),
        signal=signal, log_value=log_value, noise_sd=float(noise_sd))


def generate_synthetic_corpus(spec: SynthSpec = SynthSpec()) -> Corpus:
    return generate_synthetic(spec).corpus
