"""One-year-ahead values for young players, rankings and Kendall's tau.

A young player's reference date ``t`` is their last first-division match
before their 22nd birthday. Features come from first-division matches in
``(t - window_days, t]``; the target is the log of the valuation nearest
``t + horizon_days``, accepted within ``tolerance_days``.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyTable, ItemSetMismatch, NoPlayingTime
from .features import (BASE_COLUMNS, FeatureBuilder, FeatureTable, _assemble,
                       apply_norm_stats, position_codes)
from .forest import ForestModel, predict_forest
from .ingest import Corpus
from .lasso import LassoModel, predict_lasso
from .schema import POSITION_CODES, load_position_aliases

POSITION_COLUMNS = tuple(f"pos_{c}" for c in POSITION_CODES)
YOUNG_COLUMNS = BASE_COLUMNS + POSITION_COLUMNS
YOUNG_AGE = 22


def birthday(birth: dt.date, years: int) -> dt.date:
    """Anniversary of ``birth``; 29 February maps to 1 March in common years."""
    try:
        return birth.replace(year=birth.year + years)
    except ValueError:
        return dt.date(birth.year + years, 3, 1)


def reference_date(builder: FeatureBuilder, player_id: int, leagues) -> dt.date | None:
    """Last first-division match strictly before the 22nd birthday."""
    profile = builder.corpus.profiles[player_id]
    limit = np.datetime64(birthday(profile.birth_date, YOUNG_AGE), "D")
    dates = builder.match_dates(player_id)
    ok = (dates < limit) & np.isin(builder.match_leagues(player_id), list(leagues))
    if not ok.any():
        return None
    return dates[ok].max().astype(dt.date)


def nearest_valuation(snapshots, when: dt.date, tolerance_days: int):
    """Snapshot closest to ``when`` within the tolerance; the earlier one on ties."""
    best = None
    for v in snapshots:
        gap = abs((v.value_date - when).days)
        if gap <= tolerance_days and (best is None or gap < best[0]):
            best = (gap, v)
    return None if best is None else best[1]


def build_young_table(corpus: Corpus, first_division_leagues: Iterable[str],
                      horizon_days: int = 365, window_days: int = 365,
                      tolerance_days: int = 90, aliases: Mapping[str, str] | None = None,
                      require_target: bool = True) -> FeatureTable:
    """One row per qualifying young player, all positions together.

    With ``require_target=False`` players lacking a future valuation are kept
    with ``y = NaN`` so that they can be ranked.
    """
    aliases = aliases if aliases is not None else load_position_aliases()
    leagues = frozenset(first_division_leagues)
    builder = FeatureBuilder(corpus)
    rows, ys, pids, dates = [], [], [], []
    for pid, profile in corpus.profiles.items():
        t = reference_date(builder, pid, leagues)
        if t is None:
            continue
        target = nearest_valuation(builder.valuations.get(pid, ()),
                                   t + dt.timedelta(days=horizon_days), tolerance_days)
        if target is None and require_target:
            continue
        # (t - window, t] as a half-open [start, end) interval
        start = t - dt.timedelta(days=window_days - 1)
        end = t + dt.timedelta(days=1)
        try:
            row = builder.feature_row(pid, t, start, end, leagues)
        except NoPlayingTime:
            continue
        codes = set(position_codes(profile, aliases))
        onehot = [1.0 if c in codes else 0.0 for c in POSITION_CODES]
        rows.append(np.concatenate([row, onehot]))
        ys.append(math.nan if target is None else math.log(target.market_value))
        pids.append(pid)
        dates.append(t)
    if not rows:
        raise EmptyTable("no young player qualifies")
    return _assemble("YOUNG", YOUNG_COLUMNS, rows, ys, pids, dates)


def predict_table(model, table: FeatureTable) -> np.ndarray:
    """Log-value predictions, rescaling ``table.raw`` with the model's own statistics."""
    if tuple(model.columns) != tuple(table.columns):
        raise DimensionMismatch("model and table columns differ")
    X = table.X if model.norm_stats is None else apply_norm_stats(table.raw,
                                                                  model.norm_stats)
    if isinstance(model, LassoModel):
        return np.asarray(predict_lasso(model, X))
    if isinstance(model, ForestModel):
        return np.asarray(predict_forest(model, X))
    raise TypeError(f"cannot predict with {type(model).__name__}")


@dataclass(frozen=True)
class RankingEntry:
    rank: int
    player_id: int
    name: str
    predicted_value: float


@dataclass(frozen=True)
class RankingReport:
    entries: tuple
    kendall_tau_vs_reference: float | None = None
    coverage: str = ""

    def player_ids(self) -> list[int]:
        return [e.player_id for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "ranking": [{"rank": e.rank, "player_id": e.player_id, "name": e.name,
                         "predicted_value": e.predicted_value} for e in self.entries],
            "kendall_tau": self.kendall_tau_vs_reference,
            "coverage": self.coverage,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self, top: int | None = None) -> str:
        entries = self.entries[:top] if top else self.entries
        width = max([len(e.name) for e in entries] + [4])
        lines = [f"{'rank':>4}  {'name':<{width}}  {'predicted value':>15}"]
        for e in entries:
            lines.append(f"{e.rank:>4}  {e.name:<{width}}  {e.predicted_value:>15,.0f}")
        return "\n".join(lines) + "\n"


def rank_players(model, table: FeatureTable, names: Mapping[int, str]) -> RankingReport:
    """Rank by descending predicted value; ties go to the lower player id."""
    log_pred = predict_table(model, table)
    return rank_predictions(table.player_ids, log_pred, names)


def rank_predictions(player_ids, log_pred, names: Mapping[int, str]) -> RankingReport:
    pids = np.asarray(player_ids, dtype=np.int64)
    log_pred = np.asarray(log_pred, dtype=float)
    order = np.lexsort((pids, -log_pred))
    entries = tuple(
        RankingEntry(rank=r + 1, player_id=int(pids[i]),
                     name=names.get(int(pids[i]), str(int(pids[i]))),
                     predicted_value=float(np.exp(log_pred[i])))
        for r, i in enumerate(order))
    return RankingReport(entries)


def _merge_count(seq: list) -> tuple[list, int]:
    """Sort ``seq`` and count its inversions."""
    if len(seq) <= 1:
        return seq, 0
    mid = len(seq) // 2
    left, a = _merge_count(seq[:mid])
    right, b = _merge_count(seq[mid:])
    merged, inv, i, j = [], a + b, 0, 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            inv += len(left) - i
            j += 1
    merged += left[i:] + right[j:]
    return merged, inv


def kendall_tau(ranking_a: Sequence, ranking_b: Sequence) -> float:
    """Kendall's tau between two orderings (best first) of the same items."""
    a, b = list(ranking_a), list(ranking_b)
    if len(set(a)) != len(a) or len(set(b)) != len(b):
        raise ItemSetMismatch("rankings contain repeated items")
    if set(a) != set(b):
        raise ItemSetMismatch("rankings cover different items")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two items")
    pos_b = {item: i for i, item in enumerate(b)}
    _, discordant = _merge_count([pos_b[item] for item in a])
    pairs = n * (n - 1) // 2
    return (pairs - 2 * discordant) / pairs


def kendall_tau_on_reference(predicted: Sequence, reference: Sequence) -> float:
    """Tau on the reference's items only, in their predicted relative order."""
    ref = list(reference)
    missing = set(ref) - set(predicted)
    if missing:
        raise ItemSetMismatch(f"{len(missing)} reference items are not ranked")
    keep = set(ref)
    return kendall_tau([p for p in predicted if p in keep], ref)


def read_reference_ranking(path) -> list[int]:
    """``rank,player_id`` CSV to player ids in rank order."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.DictReader(line for line in fh if not line.startswith("#"))]
    ranks = [int(r["rank"]) for r in rows]
    if len(set(ranks)) != len(ranks):
        raise ValueError("repeated rank in reference ranking")
    return [int(r["player_id"]) for r in sorted(rows, key=lambda r: int(r["rank"]))]
