"""Parsing, validation and joining of the match, valuation and profile files.

Match statistics are held column-wise in a :class:`MatchTable`; a single
:class:`MatchRecord` is only materialised when a row is indexed.
"""

from __future__ import annotations

import datetime as dt
import os
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import (DuplicateKey, EmptyJoin, InconsistentCorpus, MalformedRow,
                     MissingBirthDate, NonPositiveValue, UnknownColumn,
                     UnknownPosition)
from .schema import (BOUNDED_PAIRS, MAX_MINUTES, STAT_INDEX, STAT_NAMES,
                     TOTAL_ACTIONS, load_position_aliases)

MATCH_KEYS = ("player_id", "match_date", "league_id")
VALUE_COLUMNS = ("player_id", "value_date", "market_value")
PROFILE_COLUMNS = ("player_id", "name", "birth_date", "positions", "league_id",
                   "youth_club", "height")
_PROFILE_REQUIRED = PROFILE_COLUMNS[:6]

# header line is line 1, first data row is line 2
_FIRST_DATA_LINE = 2


@dataclass(frozen=True)
class MatchRecord:
    player_id: int
    match_date: dt.date
    league_id: str
    stats: Mapping[str, float]


class MatchTable(Sequence):
    """Column-wise store of per-game rows.

    ``stats`` is an ``(n, len(STAT_NAMES))`` float array whose columns follow
    :data:`playervalue.schema.STAT_NAMES`.
    """

    def __init__(self, player_id, match_date, league_id, stats):
        self.player_id = np.asarray(player_id, dtype=np.int64)
        self.match_date = np.asarray(match_date, dtype="datetime64[D]")
        self.league_id = np.asarray(league_id, dtype=object)
        self.stats = np.asarray(stats, dtype=np.float64).reshape(-1, len(STAT_NAMES))
        n = len(self.player_id)
        if not (len(self.match_date) == len(self.league_id) == len(self.stats) == n):
            raise ValueError("MatchTable columns have different lengths")

    def __len__(self):
        return len(self.player_id)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.take(np.arange(len(self))[i])
        row = self.stats[i]
        return MatchRecord(
            player_id=int(self.player_id[i]),
            match_date=self.match_date[i].astype(dt.date),
            league_id=str(self.league_id[i]),
            stats=dict(zip(STAT_NAMES, row.tolist())),
        )

    def stat(self, name):
        return self.stats[:, STAT_INDEX[name]]

    def take(self, idx):
        idx = np.asarray(idx)
        return MatchTable(self.player_id[idx], self.match_date[idx],
                          self.league_id[idx], self.stats[idx])

    def canonical(self):
        """Copy sorted by (player_id, match_date)."""
        order = np.lexsort((self.match_date, self.player_id))
        return self.take(order)

    def player_ids(self):
        return set(np.unique(self.player_id).tolist())

    def __eq__(self, other):
        if not isinstance(other, MatchTable):
            return NotImplemented
        return (np.array_equal(self.player_id, other.player_id)
                and np.array_equal(self.match_date, other.match_date)
                and np.array_equal(self.league_id, other.league_id)
                and np.array_equal(self.stats, other.stats))

    __hash__ = None

    @classmethod
    def from_records(cls, records: Iterable[MatchRecord]) -> "MatchTable":
        records = list(records)
        stats = np.zeros((len(records), len(STAT_NAMES)))
        for i, rec in enumerate(records):
            for name, value in rec.stats.items():
                stats[i, STAT_INDEX[name]] = value
        return cls([r.player_id for r in records],
                   [np.datetime64(r.match_date, "D") for r in records],
                   [r.league_id for r in records], stats)


@dataclass(frozen=True, order=True)
class ValuationSnapshot:
    player_id: int
    value_date: dt.date
    market_value: float


@dataclass(frozen=True)
class PlayerProfile:
    player_id: int
    name: str
    birth_date: dt.date
    positions: frozenset
    league_id: str
    youth_club: str = ""
    height: float | None = None
    youth_top20: bool = False


@dataclass(frozen=True)
class Corpus:
    matches: MatchTable
    valuations: tuple
    profiles: Mapping[int, PlayerProfile]

    def player_ids(self):
        return set(self.profiles)

    def canonical(self) -> "Corpus":
        return Corpus(self.matches.canonical(), tuple(sorted(self.valuations)),
                      dict(sorted(self.profiles.items())))

    def __eq__(self, other):
        if not isinstance(other, Corpus):
            return NotImplemented
        a, b = self.canonical(), other.canonical()
        return (a.matches == b.matches and a.valuations == b.valuations
                and a.profiles == b.profiles)

    __hash__ = None


@dataclass(frozen=True)
class JoinReport:
    kept: int
    dropped_matches_only: int = 0
    dropped_by_source: dict = field(default_factory=dict)


def _read_strings(path):
    """Read every cell as a string, skipping leading ``#`` comment lines.

    ``frame.attrs["first_line"]`` holds the file line number of the first
    data row.
    """
    skip = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            skip += 1
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False,
                        encoding="utf-8", skipinitialspace=False, skiprows=skip)
    frame.attrs["first_line"] = _FIRST_DATA_LINE + skip
    return frame


def _parse_ids(series, what, first=_FIRST_DATA_LINE):
    ids = pd.to_numeric(series, errors="coerce")
    bad = ids.isna() | (ids != ids.round())
    if bad.any():
        line = int(np.flatnonzero(bad.to_numpy())[0]) + first
        raise MalformedRow(line, f"bad {what}")
    return ids.to_numpy().astype(np.int64)


def _to_float(frame) -> np.ndarray:
    """Exact (correctly rounded) string to float; unparsable cells become NaN."""
    values = frame.to_numpy(dtype=object)
    try:
        return values.astype(np.float64)
    except ValueError:
        # pandas' fast parser can be off by an ulp, so only use it to find bad cells
        coerced = pd.DataFrame(values).apply(pd.to_numeric, errors="coerce").to_numpy()
        out = np.full(values.shape, np.nan)
        ok = ~pd.isna(coerced)
        out[ok] = values[ok].astype(np.float64)
        return out


def _parse_dates(series, what, first=_FIRST_DATA_LINE):
    dates = pd.to_datetime(series, format="%Y-%m-%d", errors="coerce")
    bad = dates.isna()
    if bad.any():
        line = int(np.flatnonzero(bad.to_numpy())[0]) + first
        raise MalformedRow(line, f"bad {what}")
    return dates.to_numpy().astype("datetime64[D]")


def _first_duplicate(keys: pd.DataFrame, first=_FIRST_DATA_LINE):
    dup = keys.duplicated()
    if dup.any():
        return int(np.flatnonzero(dup.to_numpy())[0]) + first
    return None


def validate_stats(stats: np.ndarray, first_line: int = _FIRST_DATA_LINE):
    """Check per-game invariants on an ``(n, n_stats)`` array; raise on the first bad row."""
    problems = np.zeros(len(stats), dtype=bool)
    reasons = []

    def flag(mask, reason):
        nonlocal problems
        new = mask & ~problems
        if new.any():
            reasons.append((int(np.flatnonzero(new)[0]), reason))
        problems |= mask

    flag((stats < 0).any(axis=1), "negative statistic")
    matches = stats[:, STAT_INDEX["total_matches"]]
    flag((matches != 0) & (matches != 1), "total_matches not in {0, 1}")
    minutes = stats[:, STAT_INDEX["total_minutes_on_field"]]
    flag(minutes > MAX_MINUTES, "total_minutes_on_field above 130")
    for part, whole in BOUNDED_PAIRS:
        flag(stats[:, STAT_INDEX[part]] > stats[:, STAT_INDEX[whole]],
             f"{part} exceeds {whole}")
    if reasons:
        row, reason = min(reasons)
        raise MalformedRow(row + first_line, reason)


def parse_matches(path) -> MatchTable:
    """Parse a per-game statistics file.

    Stat columns missing from the header, and empty stat cells, read as 0.
    When ``total_actions`` is absent it is derived as defensive plus
    attacking actions.
    """
    frame = _read_strings(path)
    first = frame.attrs["first_line"]
    columns = list(frame.columns)
    if columns[:1] == ["player_id_transfermarkt"]:
        columns[0] = "player_id"
        frame.columns = columns
    for key in MATCH_KEYS:
        if key not in columns:
            raise MalformedRow(1, f"missing column {key!r}")
    stat_cols = [c for c in columns if c not in MATCH_KEYS]
    for c in stat_cols:
        if c not in STAT_INDEX:
            raise UnknownColumn(c)
    if len(set(columns)) != len(columns):
        dup = next(c for c, k in Counter(columns).items() if k > 1)
        raise MalformedRow(1, f"repeated column {dup!r}")

    n = len(frame)
    stats = np.zeros((n, len(STAT_NAMES)))
    if stat_cols:
        raw = frame[stat_cols].replace("", "0")
        numeric = _to_float(raw)
        bad = ~np.isfinite(numeric)
        if bad.any():
            row = int(np.flatnonzero(bad.any(axis=1))[0])
            col = stat_cols[int(np.flatnonzero(bad[row])[0])]
            raise MalformedRow(row + first, f"non-numeric {col!r}")
        stats[:, [STAT_INDEX[c] for c in stat_cols]] = numeric
    if TOTAL_ACTIONS not in stat_cols:
        stats[:, STAT_INDEX[TOTAL_ACTIONS]] = (
            stats[:, STAT_INDEX["total_defensive_actions"]]
            + stats[:, STAT_INDEX["total_attacking_actions"]])

    player_id = _parse_ids(frame["player_id"], "player_id", first)
    match_date = _parse_dates(frame["match_date"], "match_date", first)
    league_id = frame["league_id"].to_numpy(dtype=object)
    dup_line = _first_duplicate(pd.DataFrame({"p": player_id, "d": match_date}), first)
    if dup_line is not None:
        raise DuplicateKey(f"line {dup_line}: repeated (player_id, match_date)")
    validate_stats(stats, first)
    return MatchTable(player_id, match_date, league_id, stats)


def parse_valuations(path) -> list[ValuationSnapshot]:
    frame = _read_strings(path)
    first = frame.attrs["first_line"]
    for c in frame.columns:
        if c not in VALUE_COLUMNS:
            raise UnknownColumn(c)
    for c in VALUE_COLUMNS:
        if c not in frame.columns:
            raise MalformedRow(1, f"missing column {c!r}")
    ids = _parse_ids(frame["player_id"], "player_id", first)
    dates = _parse_dates(frame["value_date"], "value_date", first)
    values = _to_float(frame["market_value"])
    bad = ~np.isfinite(values)
    if bad.any():
        raise MalformedRow(int(np.flatnonzero(bad)[0]) + first,
                           "non-numeric market_value")
    if (values <= 0).any():
        line = int(np.flatnonzero(values <= 0)[0]) + first
        raise NonPositiveValue(f"line {line}: market value must be positive")
    dup_line = _first_duplicate(pd.DataFrame({"p": ids, "d": dates}), first)
    if dup_line is not None:
        raise DuplicateKey(f"line {dup_line}: repeated (player_id, value_date)")
    return [ValuationSnapshot(int(p), d.astype(dt.date), float(v))
            for p, d, v in zip(ids, dates, values)]


def read_club_list(path) -> frozenset:
    """One club name per line; blank lines and ``#`` comments ignored."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh
                         if line.strip() and not line.lstrip().startswith("#"))


def parse_profiles(path, top20_clubs: Iterable[str] = (),
                   aliases: Mapping[str, str] | None = None) -> dict[int, PlayerProfile]:
    """Parse player profiles.

    ``positions`` cells hold ``;``-separated TransferMarkt labels which must
    appear in ``aliases`` (the packaged alias table by default). ``height`` is
    an optional column in centimetres.
    """
    if aliases is None:
        aliases = load_position_aliases()
    top20 = frozenset(top20_clubs)
    frame = _read_strings(path)
    first = frame.attrs["first_line"]
    for c in frame.columns:
        if c not in PROFILE_COLUMNS:
            raise UnknownColumn(c)
    for c in _PROFILE_REQUIRED:
        if c not in frame.columns:
            raise MalformedRow(1, f"missing column {c!r}")
    ids = _parse_ids(frame["player_id"], "player_id", first)
    dup = pd.Series(ids).duplicated().to_numpy()
    if dup.any():
        raise DuplicateKey(f"line {int(np.flatnonzero(dup)[0]) + first}: "
                           "repeated player_id")
    heights = frame["height"] if "height" in frame.columns else None

    profiles = {}
    for i, pid in enumerate(ids):
        line = i + first
        birth = frame["birth_date"].iat[i].strip()
        if not birth:
            raise MissingBirthDate(f"line {line}: player {pid}")
        try:
            birth_date = dt.date.fromisoformat(birth)
        except ValueError:
            raise MalformedRow(line, "bad birth_date") from None
        labels = [s.strip() for s in frame["positions"].iat[i].split(";") if s.strip()]
        if not labels:
            raise MalformedRow(line, "no position")
        for label in labels:
            if label not in aliases:
                raise UnknownPosition(label)
        height = None
        if heights is not None and heights.iat[i].strip():
            try:
                height = float(heights.iat[i])
            except ValueError:
                raise MalformedRow(line, "bad height") from None
        youth = frame["youth_club"].iat[i].strip()
        profiles[int(pid)] = PlayerProfile(
            player_id=int(pid),
            name=frame["name"].iat[i],
            birth_date=birth_date,
            positions=frozenset(labels),
            league_id=frame["league_id"].iat[i].strip(),
            youth_club=youth,
            height=height,
            youth_top20=bool(youth) and youth in top20,
        )
    return profiles


def join_corpus(matches: MatchTable, valuations: Sequence[ValuationSnapshot],
                profiles: Mapping[int, PlayerProfile]) -> tuple[Corpus, JoinReport]:
    """Keep only players present in all three sources."""
    match_ids = matches.player_ids()
    value_ids = {v.player_id for v in valuations}
    profile_ids = set(profiles)
    keep = match_ids & value_ids & profile_ids
    if not keep:
        raise EmptyJoin("no player is present in all three sources")

    mask = np.isin(matches.player_id, np.fromiter(keep, dtype=np.int64))
    kept_matches = matches.take(np.flatnonzero(mask))
    births = np.array([np.datetime64(profiles[p].birth_date, "D")
                       for p in kept_matches.player_id.tolist()], dtype="datetime64[D]")
    early = kept_matches.match_date <= births
    if early.any():
        pid = int(kept_matches.player_id[np.flatnonzero(early)[0]])
        raise InconsistentCorpus(f"player {pid} has a match on or before birth")

    corpus = Corpus(
        matches=kept_matches,
        valuations=tuple(v for v in valuations if v.player_id in keep),
        profiles={p: profiles[p] for p in sorted(keep)},
    )
    report = JoinReport(
        kept=len(keep),
        dropped_by_source={
            "matches": len(match_ids - keep),
            "valuations": len(value_ids - keep),
            "profiles": len(profile_ids - keep),
        },
    )
    return corpus, report


def load_corpus(matches_path, values_path, profiles_path, top20_clubs=(),
                aliases=None) -> tuple[Corpus, JoinReport]:
    """Parse the three files (concurrently) and join them."""
    with ThreadPoolExecutor(max_workers=3) as pool:
        fm = pool.submit(parse_matches, matches_path)
        fv = pool.submit(parse_valuations, values_path)
        fp = pool.submit(parse_profiles, profiles_path, top20_clubs, aliases)
        return join_corpus(fm.result(), fv.result(), fp.result())


def _fmt_number(values: np.ndarray) -> list[str]:
    out = []
    for v in values.tolist():
        out.append(str(int(v)) if float(v).is_integer() else repr(v))
    return out


def _open_with_header(path, header):
    fh = open(path, "w", encoding="utf-8", newline="")
    if header:
        fh.write(header)
    return fh


def write_matches(matches: MatchTable, path, header: str | None = None):
    frame = pd.DataFrame({
        "player_id": matches.player_id,
        "match_date": np.datetime_as_string(matches.match_date, unit="D"),
        "league_id": matches.league_id,
    })
    stats = pd.DataFrame({name: _fmt_number(matches.stats[:, j])
                          for j, name in enumerate(STAT_NAMES)})
    with _open_with_header(path, header) as fh:
        pd.concat([frame, stats], axis=1).to_csv(fh, index=False, lineterminator="\n")


def write_valuations(valuations: Iterable[ValuationSnapshot], path,
                     header: str | None = None):
    with _open_with_header(path, header) as fh:
        fh.write(",".join(VALUE_COLUMNS) + "\n")
        for v in valuations:
            fh.write(f"{v.player_id},{v.value_date.isoformat()},"
                     f"{_fmt_number(np.array([v.market_value]))[0]}\n")


def write_profiles(profiles: Mapping[int, PlayerProfile], path,
                   header: str | None = None):
    rows = [{
        "player_id": p.player_id,
        "name": p.name,
        "birth_date": p.birth_date.isoformat(),
        "positions": ";".join(sorted(p.positions)),
        "league_id": p.league_id,
        "youth_club": p.youth_club,
        "height": "" if p.height is None else repr(float(p.height)),
    } for p in profiles.values()]
    with _open_with_header(path, header) as fh:
        pd.DataFrame(rows, columns=list(PROFILE_COLUMNS)).to_csv(
            fh, index=False, lineterminator="\n")


def write_corpus(corpus: Corpus, directory, top20_clubs: Iterable[str] | None = None,
                 header: str | None = None):
    """Write ``matches.csv``, ``values.csv`` and ``profiles.csv`` (and optionally
    ``top20_clubs.txt``) under ``directory``, each led by ``header`` if given."""
    os.makedirs(directory, exist_ok=True)
    write_matches(corpus.matches, os.path.join(directory, "matches.csv"), header)
    write_valuations(corpus.valuations, os.path.join(directory, "values.csv"), header)
    write_profiles(corpus.profiles, os.path.join(directory, "profiles.csv"), header)
    if top20_clubs is not None:
        with _open_with_header(os.path.join(directory, "top20_clubs.txt"), header) as fh:
            fh.writelines(f"{c}\n" for c in sorted(top20_clubs))
