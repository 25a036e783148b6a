"""Per-position design matrices and log-value targets.

Each sample is a player at a target valuation date ``t``. Match statistics are
summed over a window that ends ``horizon_days`` before ``t``, turned into
per-minute rates, and extended with ratio, squared, profile and league
features. Columns are then normalized as ``(x - mean) / max``.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
import warnings
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyTable, NoPlayingTime
from .ingest import Corpus, PlayerProfile
from .schema import (POSITION_CODES, RATIO_FEATURES, STAT_INDEX, STAT_NAMES,
                     TOTAL_STATS, load_position_aliases)

CONTINUOUS = "continuous"
BOOLEAN = "boolean"
CENTERED = "centered"

LEAGUE_FEATURE = "log_league_avg_value"
SQUARED_RATES = ("total_goals", "total_assists", "total_shots")
PROFILE_FEATURES = ("age", "age_sq", "height", "height_sq",
                    *(f"{s}_sq" for s in SQUARED_RATES), "is_top_20", LEAGUE_FEATURE)

RATIO_NAMES = tuple(name for name, _, _ in RATIO_FEATURES)
BASE_COLUMNS = STAT_NAMES + RATIO_NAMES + PROFILE_FEATURES

_MINUTES = STAT_INDEX["total_minutes_on_field"]
_RATE_MASK = np.array([name not in TOTAL_STATS for name in STAT_NAMES])
_RATIO_NUM = np.array([STAT_INDEX[num] for _, num, _ in RATIO_FEATURES])
_RATIO_DEN = np.array([STAT_INDEX[den] for _, _, den in RATIO_FEATURES])

DAYS_PER_YEAR = 365.25


def column_kind(name: str) -> str:
    if name == LEAGUE_FEATURE:
        return CENTERED
    if name == "is_top_20" or name.startswith("pos_"):
        return BOOLEAN
    return CONTINUOUS


@dataclass(frozen=True)
class WindowSpec:
    horizon_days: int = 730
    window_length_days: int = 730

    def __post_init__(self):
        if self.horizon_days <= 0 or self.window_length_days <= 0:
            raise ValueError("window horizon and length must be positive")

    def bounds(self, t: dt.date) -> tuple[dt.date, dt.date]:
        """Half-open ``[start, end)`` match-date interval for target date ``t``."""
        end = t - dt.timedelta(days=self.horizon_days)
        return end - dt.timedelta(days=self.window_length_days), end


@dataclass(frozen=True)
class WindowAggregate:
    sums: dict
    rates: dict


@dataclass(frozen=True)
class FeatureTable:
    """Design matrix for one dataset.

    ``raw`` holds the unnormalized features (NaN marks a missing height),
    ``X`` the normalized ones, and ``norm_stats`` the ``(mean, scale)`` pair of
    every column so that ``X == (impute(raw) - mean) / scale``.
    """

    position_code: str
    columns: tuple
    X: np.ndarray
    y: np.ndarray
    player_ids: np.ndarray
    norm_stats: np.ndarray
    raw: np.ndarray
    kinds: tuple
    target_dates: tuple = ()
    degenerate: tuple = ()

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate column names")
        if self.X.shape != (len(self.y), len(self.columns)):
            raise ValueError("X shape does not match y and columns")

    @property
    def n_samples(self):
        return len(self.y)

    def column(self, name):
        return self.X[:, self.columns.index(name)]

    def subset(self, rows) -> "FeatureTable":
        """Row subset keeping the current normalization (no refit)."""
        rows = np.asarray(rows)
        dates = tuple(self.target_dates[i] for i in rows) if self.target_dates else ()
        return replace(self, X=self.X[rows], y=self.y[rows],
                       player_ids=self.player_ids[rows], raw=self.raw[rows],
                       target_dates=dates)

    def drop_columns(self, names: Iterable[str]) -> "FeatureTable":
        names = set(names)
        keep = [j for j, c in enumerate(self.columns) if c not in names]
        return replace(
            self,
            columns=tuple(self.columns[j] for j in keep),
            X=self.X[:, keep], raw=self.raw[:, keep],
            norm_stats=self.norm_stats[keep],
            kinds=tuple(self.kinds[j] for j in keep),
            degenerate=tuple(c for c in self.degenerate if c not in names),
        )


# -- normalization -----------------------------------------------------------

def fit_norm_stats(raw: np.ndarray, kinds) -> tuple[np.ndarray, tuple]:
    """Per-column ``(mean, scale)`` and the names' indices of degenerate columns."""
    n, d = raw.shape
    stats = np.empty((d, 2))
    degenerate = []
    for j in range(d):
        col = raw[:, j]
        finite = col[~np.isnan(col)]
        if kinds[j] == BOOLEAN:
            stats[j] = (0.0, 1.0)
            continue
        if finite.size == 0:
            stats[j] = (0.0, 1.0)
            degenerate.append(j)
            continue
        mean = float(np.mean(finite))
        if kinds[j] == CENTERED:
            stats[j] = (mean, 1.0)
            continue
        top = float(np.max(finite))
        if top == 0.0:
            stats[j] = (mean, 1.0)
            degenerate.append(j)
        else:
            stats[j] = (mean, top)
    return stats, tuple(degenerate)


def apply_norm_stats(raw: np.ndarray, stats: np.ndarray) -> np.ndarray:
    """Impute NaN with the column mean, then ``(x - mean) / scale``."""
    mean, scale = stats[:, 0], stats[:, 1]
    filled = np.where(np.isnan(raw), mean, raw)
    return (filled - mean) / scale


def normalize(table: FeatureTable) -> FeatureTable:
    """Refit normalization statistics on ``table.raw``.

    Continuous columns use ``(x - mean) / max``; the league feature is only
    mean-centred; boolean columns pass through. A column whose max is 0 maps
    to zeros and is listed in ``degenerate``.
    """
    if table.n_samples < 2:
        raise ValueError("normalization needs at least 2 rows")
    stats, degenerate = fit_norm_stats(table.raw, table.kinds)
    names = tuple(table.columns[j] for j in degenerate)
    if names:
        warnings.warn(f"{table.position_code}: degenerate columns {list(names)}",
                      stacklevel=2)
    return replace(table, X=apply_norm_stats(table.raw, stats), norm_stats=stats,
                   degenerate=names)


def normalize_column(values) -> tuple[np.ndarray, bool]:
    """Normalize one continuous column; returns ``(values, degenerate)``."""
    raw = np.asarray(values, dtype=float).reshape(-1, 1)
    stats, degenerate = fit_norm_stats(raw, (CONTINUOUS,))
    return apply_norm_stats(raw, stats)[:, 0], bool(degenerate)


# -- raw feature construction ------------------------------------------------

def age_years(birth: dt.date, t: dt.date) -> float:
    return (t - birth).days / DAYS_PER_YEAR


def ratio_features(window_sums) -> dict:
    """Engineered ratios from window sums; a zero denominator gives 0."""
    if isinstance(window_sums, Mapping):
        sums = np.array([window_sums.get(name, 0.0) for name in STAT_NAMES])
    else:
        sums = np.asarray(window_sums, dtype=float)
    return dict(zip(RATIO_NAMES, _ratios(sums[None, :])[0].tolist()))


def _ratios(sums: np.ndarray) -> np.ndarray:
    num = sums[:, _RATIO_NUM]
    den = sums[:, _RATIO_DEN]
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den != 0)
    return out


class _LeagueValues:
    """Mean of league members' latest valuation on or before a date."""

    def __init__(self, corpus: Corpus):
        by_league: dict[str, list] = {}
        for v in corpus.valuations:
            prof = corpus.profiles.get(v.player_id)
            if prof is None:
                continue
            by_league.setdefault(prof.league_id, []).append(
                (np.datetime64(v.value_date, "D"), v.player_id, v.market_value))
        self._events = {}
        for league, events in by_league.items():
            events.sort(key=lambda e: (e[0], e[1]))
            dates = np.array([e[0] for e in events], dtype="datetime64[D]")
            players = np.array([e[1] for e in events], dtype=np.int64)
            values = np.array([e[2] for e in events], dtype=float)
            self._events[league] = (dates, players, values)
        self._cache = {}

    def mean_value(self, league: str, t: dt.date) -> float:
        key = (league, t)
        if key in self._cache:
            return self._cache[key]
        result = math.nan
        if league in self._events:
            dates, players, values = self._events[league]
            stop = int(np.searchsorted(dates, np.datetime64(t, "D"), side="right"))
            if stop:
                # last occurrence per player within the prefix
                rev_players = players[:stop][::-1]
                _, first = np.unique(rev_players, return_index=True)
                latest = values[:stop][::-1][np.sort(first)]
                result = float(np.mean(latest))
        self._cache[key] = result
        return result


class FeatureBuilder:
    """Cached indices over a corpus for fast per-player feature rows."""

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        m = corpus.matches
        order = np.lexsort((m.match_date, m.player_id))
        self._pid = m.player_id[order]
        self._dates = m.match_date[order]
        self._league = m.league_id[order]
        self._stats = m.stats[order]
        ids, starts = np.unique(self._pid, return_index=True)
        ends = np.append(starts[1:], len(self._pid))
        self._slices = {int(p): (int(s), int(e)) for p, s, e in zip(ids, starts, ends)}
        self.leagues = _LeagueValues(corpus)
        vals: dict[int, list] = {}
        for v in corpus.valuations:
            vals.setdefault(v.player_id, []).append(v)
        self.valuations = {p: sorted(vs, key=lambda v: v.value_date)
                           for p, vs in vals.items()}

    def match_dates(self, player_id) -> np.ndarray:
        s, e = self._slices.get(player_id, (0, 0))
        return self._dates[s:e]

    def match_leagues(self, player_id) -> np.ndarray:
        s, e = self._slices.get(player_id, (0, 0))
        return self._league[s:e]

    def window_sums(self, player_id, start: dt.date, end: dt.date,
                    leagues=None) -> np.ndarray:
        """Stat sums over matches dated in ``[start, end)``."""
        s, e = self._slices.get(player_id, (0, 0))
        dates = self._dates[s:e]
        lo = s + int(np.searchsorted(dates, np.datetime64(start, "D"), side="left"))
        hi = s + int(np.searchsorted(dates, np.datetime64(end, "D"), side="left"))
        block = self._stats[lo:hi]
        if leagues is not None:
            block = block[np.isin(self._league[lo:hi], list(leagues))]
        return block.sum(axis=0)

    def base_row(self, sums: np.ndarray) -> np.ndarray:
        """Per-minute rates (totals kept for minutes and matches) then ratios."""
        minutes = sums[_MINUTES]
        if not minutes > 0:
            raise NoPlayingTime("no minutes played in the window")
        rates = np.where(_RATE_MASK, sums / minutes, sums)
        return np.concatenate([rates, _ratios(sums[None, :])[0]])

    def profile_row(self, profile: PlayerProfile, t: dt.date,
                    rates: np.ndarray) -> np.ndarray:
        age = age_years(profile.birth_date, t)
        height = math.nan if profile.height is None else float(profile.height)
        squares = [rates[STAT_INDEX[s]] ** 2 for s in SQUARED_RATES]
        league = self.leagues.mean_value(profile.league_id, t)
        log_league = math.log(league) if league > 0 else math.nan
        return np.array([age, age * age, height, height * height, *squares,
                         1.0 if profile.youth_top20 else 0.0, log_league])

    def feature_row(self, player_id, t: dt.date, start: dt.date, end: dt.date,
                    leagues=None) -> np.ndarray:
        sums = self.window_sums(player_id, start, end, leagues)
        base = self.base_row(sums)
        return np.concatenate(
            [base, self.profile_row(self.corpus.profiles[player_id], t, base)])


def aggregate_window(corpus: Corpus, player_id: int, t: dt.date,
                     spec: WindowSpec = WindowSpec(),
                     builder: FeatureBuilder | None = None) -> WindowAggregate:
    """Window sums and per-minute rates for one player and target date."""
    builder = builder or FeatureBuilder(corpus)
    start, end = spec.bounds(t)
    sums = builder.window_sums(player_id, start, end)
    rates = builder.base_row(sums)[: len(STAT_NAMES)]
    return WindowAggregate(sums=dict(zip(STAT_NAMES, sums.tolist())),
                           rates=dict(zip(STAT_NAMES, rates.tolist())))


def augment_features(base: Mapping[str, float], profile: PlayerProfile,
                     corpus: Corpus, t: dt.date,
                     builder: FeatureBuilder | None = None) -> dict:
    """Age, height, squared rates, youth flag and the (uncentred) log league value.

    ``base`` maps stat names to per-minute rates. Centring of the league
    feature happens in :func:`normalize`.
    """
    builder = builder or FeatureBuilder(corpus)
    rates = np.array([base.get(name, 0.0) for name in STAT_NAMES])
    row = builder.profile_row(profile, t, rates)
    return dict(zip(PROFILE_FEATURES, row.tolist()))


def position_codes(profile: PlayerProfile, aliases: Mapping[str, str]) -> list[str]:
    codes = {aliases[label] for label in profile.positions}
    return [c for c in POSITION_CODES if c in codes]


def _assemble(code, columns, rows, ys, pids, dates) -> FeatureTable:
    raw = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    kinds = tuple(column_kind(c) for c in columns)
    table = FeatureTable(
        position_code=code, columns=tuple(columns), X=np.zeros_like(raw),
        y=np.array(ys, dtype=float), player_ids=np.array(pids, dtype=np.int64),
        norm_stats=np.zeros((len(columns), 2)), raw=raw, kinds=kinds,
        target_dates=tuple(dates))
    return normalize(table)


def last_valuation(builder: FeatureBuilder, player_id):
    return builder.valuations[player_id][-1]


def build_position_tables(corpus: Corpus, spec: WindowSpec = WindowSpec(),
                          aliases: Mapping[str, str] | None = None,
                          positions: Iterable[str] = POSITION_CODES,
                          ) -> dict[str, FeatureTable]:
    """One normalized table per position code.

    The target is the log of each player's last valuation; a player listed
    under several codes contributes one identical row to each table.
    Players without minutes in their window are dropped.
    """
    aliases = aliases if aliases is not None else load_position_aliases()
    positions = tuple(positions)
    builder = FeatureBuilder(corpus)
    buckets = {code: ([], [], [], []) for code in positions}
    for pid, profile in corpus.profiles.items():
        codes = [c for c in position_codes(profile, aliases) if c in buckets]
        if not codes or pid not in builder.valuations:
            continue
        target = last_valuation(builder, pid)
        start, end = spec.bounds(target.value_date)
        try:
            row = builder.feature_row(pid, target.value_date, start, end)
        except NoPlayingTime:
            continue
        y = math.log(target.market_value)
        for code in codes:
            rows, ys, pids, dates = buckets[code]
            rows.append(row)
            ys.append(y)
            pids.append(pid)
            dates.append(target.value_date)
    tables = {}
    for code in positions:
        rows, ys, pids, dates = buckets[code]
        if not rows:
            raise EmptyTable(code)
        tables[code] = _assemble(code, BASE_COLUMNS, rows, ys, pids, dates)
    return tables


def write_feature_table(table: FeatureTable, path, header: str | None = None):
    """CSV with the normalized feature columns, then ``y``, then ``player_id``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(header)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*table.columns, "y", "player_id"])
        for row, y, pid in zip(table.X.tolist(), table.y.tolist(),
                               table.player_ids.tolist()):
            writer.writerow([*map(repr, row), repr(y), pid])
