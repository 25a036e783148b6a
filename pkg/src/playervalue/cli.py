"""Batch command line: ``playervalue <command> --config run.toml [flags]``.

Every command reads the same TOML file; flags override its keys. Relative
paths in the file are resolved against the file's directory. Each output
starts with a provenance line (``#`` comment in CSV/text, ``meta`` key in
JSON) holding the config hash and seed, and nothing else that varies between
runs, so identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PlayerValueError
from .evaluation import cross_validate, write_cv_table
from .features import LEAGUE_FEATURE, WindowSpec, build_position_tables, write_feature_table
from .forest import ForestConfig, fit_forest, write_importance_csv
from .ingest import load_corpus, read_club_list, write_corpus
from .lasso import LassoConfig, age_curve, fit_lasso, select_lambda_for_sparsity
from .ranking import (build_young_table, kendall_tau_on_reference, rank_players,
                      read_reference_ranking)
from .schema import POSITION_CODES, load_position_aliases
from .synth import SynthSpec, generate_synthetic
from .trees import TreeConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMANDS = ("ingest", "features", "train", "evaluate", "importance", "rank", "synth")
MODELS = ("lasso", "forest")


@dataclass
class RunConfig:
    raw: dict
    base_dir: str
    seed: int
    out: str
    position: str | None = None
    model: str | None = None
    no_league_feature: bool = False
    reference: str | None = None
    hashed: dict = field(default_factory=dict)

    def section(self, name) -> dict:
        value = self.raw.get(name, {})
        if not isinstance(value, dict):
            raise ConfigError(f"[{name}] must be a table")
        return value

    def path(self, section, key, required=True) -> str | None:
        value = self.section(section).get(key)
        if value is None:
            if required:
                raise ConfigError(f"missing {section}.{key}")
            return None
        path = value if os.path.isabs(value) else os.path.join(self.base_dir, value)
        if not os.path.exists(path):
            raise ConfigError(f"{section}.{key}: no such file {path}")
        return path

    @property
    def digest(self) -> str:
        blob = json.dumps(self.hashed, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def header(self) -> str:
        return f"# playervalue config_sha256={self.digest} seed={self.seed}\n"

    def meta(self) -> dict:
        return {"config_sha256": self.digest, "seed": self.seed}


def _file_digest(path) -> str | None:
    """Content hash, so that provenance does not depend on where a file lives."""
    if path is None:
        return None
    try:
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    except FileNotFoundError:
        raise ConfigError(f"no such reference file {path}") from None


def load_config(args) -> RunConfig:
    raw, base = {}, os.getcwd()
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                raw = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"no such config file {args.config}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad config: {exc}") from None
        base = os.path.dirname(os.path.abspath(args.config))
    seed = args.seed if args.seed is not None else raw.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (config key 'seed' or --seed)")
    out = args.out or raw.get("out") or "out"
    if not os.path.isabs(out) and args.out is None:
        out = os.path.join(base, out)
    hashed = copy.deepcopy(raw)
    hashed.pop("out", None)
    hashed.update(seed=int(seed), position=args.position,
                  model=args.model, no_league_feature=args.no_league_feature,
                  reference=_file_digest(args.reference))
    return RunConfig(raw=raw, base_dir=base, seed=int(seed), out=out,
                     position=args.position, model=args.model,
                     no_league_feature=args.no_league_feature,
                     reference=args.reference, hashed=hashed)


# -- shared pipeline pieces --------------------------------------------------

def _aliases(cfg):
    path = cfg.path("data", "aliases", required=False)
    return load_position_aliases(path)


def _corpus(cfg):
    top20_path = cfg.path("data", "top20", required=False)
    top20 = read_club_list(top20_path) if top20_path else ()
    return load_corpus(cfg.path("data", "matches"), cfg.path("data", "values"),
                       cfg.path("data", "profiles"), top20, _aliases(cfg))


def _window(cfg) -> WindowSpec:
    sec = cfg.section("features")
    return WindowSpec(int(sec.get("horizon_days", 730)), int(sec.get("window_days", 730)))


def _positions(cfg) -> tuple:
    if cfg.position:
        if cfg.position not in POSITION_CODES:
            raise ConfigError(f"unknown position code {cfg.position!r}")
        return (cfg.position,)
    return tuple(cfg.section("features").get("positions", POSITION_CODES))


def _models(cfg) -> tuple:
    if cfg.model:
        return (cfg.model,)
    return tuple(cfg.section("evaluate").get("models", MODELS))


def _tables(cfg, corpus=None):
    corpus = corpus if corpus is not None else _corpus(cfg)[0]
    tables = build_position_tables(corpus, _window(cfg), _aliases(cfg), _positions(cfg))
    if cfg.no_league_feature:
        tables = {k: t.drop_columns([LEAGUE_FEATURE]) for k, t in tables.items()}
    return tables


def _lasso_base(cfg) -> LassoConfig:
    sec = cfg.section("lasso")
    return LassoConfig(lam=float(sec.get("lambda", 0.005)),
                       max_sweeps=int(sec.get("max_sweeps", 1000)),
                       tol=float(sec.get("tol", 1e-7)),
                       scaling=sec.get("scaling", "mean"))


def _lasso_config(cfg, table) -> LassoConfig:
    """Fixed ``lasso.lambda`` if set, otherwise the sparsity-targeted penalty."""
    base = _lasso_base(cfg)
    sec = cfg.section("lasso")
    if "lambda" in sec:
        return base
    lo, hi = sec.get("sparsity", (10, 15))
    choice = select_lambda_for_sparsity(table, target=(int(lo), int(hi)), cfg=base)
    return LassoConfig(choice.lam, base.max_sweeps, base.tol, base.scaling)


def _forest_config(cfg) -> ForestConfig:
    sec = cfg.section("forest")
    tree = TreeConfig(max_depth=sec.get("max_depth", 6),
                      min_samples_leaf=int(sec.get("min_samples_leaf", 5)))
    return ForestConfig(n_trees=int(sec.get("n_trees", 100)), tree=tree,
                        feature_subset_size=sec.get("feature_subset_size"),
                        bootstrap=bool(sec.get("bootstrap", True)), seed=cfg.seed)


def _write_json(cfg, path, payload):
    body = {"meta": cfg.meta(), **payload}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(body, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _write_text(cfg, path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cfg.header())
        fh.write(text)


def _out(cfg, name) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


# -- commands ----------------------------------------------------------------

def cmd_ingest(cfg) -> dict:
    corpus, report = _corpus(cfg)
    summary = {
        "players": len(corpus.profiles),
        "matches": len(corpus.matches),
        "valuations": len(corpus.valuations),
        "dropped_by_source": report.dropped_by_source,
    }
    _write_json(cfg, _out(cfg, "corpus_summary.json"), summary)
    return summary


def cmd_features(cfg) -> dict:
    written = {}
    for code, table in _tables(cfg).items():
        path = _out(cfg, f"features_{code}.csv")
        write_feature_table(table, path, cfg.header())
        written[code] = table.n_samples
    return written


def _fit(cfg, table, kind):
    if kind == "lasso":
        return fit_lasso(table, _lasso_config(cfg, table))
    if kind == "forest":
        return fit_forest(table, _forest_config(cfg))
    raise ConfigError(f"unknown model {kind!r}")


def cmd_train(cfg) -> dict:
    if not cfg.position:
        raise ConfigError("train needs --position")
    kind = cfg.model or "lasso"
    table = _tables(cfg)[cfg.position]
    model = _fit(cfg, table, kind)
    stem = f"{cfg.position}_{kind}"
    _write_json(cfg, _out(cfg, f"model_{stem}.json"), model.to_dict())
    if kind == "lasso":
        log = (f"lambda {model.lam!r}\nconverged {model.converged}\n"
               f"sweeps {model.sweeps_used}\nactive {len(model.active_set)}\n"
               f"objective {model.objective_history[-1]!r}\n")
    else:
        log = (f"trees {len(model.trees)}\nno_splits {model.no_splits}\n"
               f"samples {table.n_samples}\n")
    _write_text(cfg, _out(cfg, f"fit_{stem}.log"), log)
    return {"model": kind, "position": cfg.position, "samples": table.n_samples}


def cmd_evaluate(cfg) -> dict:
    k = int(cfg.section("evaluate").get("k", 5))
    corpus = _corpus(cfg)[0]
    tables = build_position_tables(corpus, _window(cfg), _aliases(cfg), _positions(cfg))
    variants = [("with_league", False), ("without_league", True)]
    if cfg.no_league_feature:
        variants = variants[1:]
    result = {}
    for name, drop in variants:
        reports = []
        for code, table in tables.items():
            if drop:
                table = table.drop_columns([LEAGUE_FEATURE])
            for kind in _models(cfg):
                if kind == "lasso":
                    spec = _lasso_config(cfg, table)
                    rep = cross_validate(table, spec, k, cfg.seed)
                elif kind == "forest":
                    rep = cross_validate(table, _forest_config(cfg), k, cfg.seed,
                                         full_fit=False)
                else:
                    raise ConfigError(f"unknown model {kind!r}")
                reports.append(rep)
        write_cv_table(reports, _out(cfg, f"cv_{name}.csv"), cfg.header())
        result[name] = [r.to_dict() for r in reports]
    _write_json(cfg, _out(cfg, "cv_reports.json"), result)
    return result


def cmd_importance(cfg) -> dict:
    if not cfg.position:
        raise ConfigError("importance needs --position")
    table = _tables(cfg)[cfg.position]
    sec = cfg.section("importance")
    lasso_cfg = _lasso_config(cfg, table)
    if "lambda" in sec:
        lasso_cfg = LassoConfig(float(sec["lambda"]),
                                int(sec.get("max_sweeps", lasso_cfg.max_sweeps)),
                                lasso_cfg.tol, lasso_cfg.scaling)
    lasso = fit_lasso(table, lasso_cfg)
    lines = ["feature,coefficient"]
    for j in np.flatnonzero(lasso.coefficients):
        lines.append(f"{table.columns[j]},{float(lasso.coefficients[j])!r}")
    _write_text(cfg, _out(cfg, f"lasso_coefficients_{cfg.position}.csv"),
                "\n".join(lines) + "\n")
    forest = fit_forest(table, _forest_config(cfg))
    write_importance_csv(forest, _out(cfg, f"forest_importance_{cfg.position}.csv"),
                         cfg.header())
    ages, curve = age_curve(lasso)
    rows = ["age,log_value"] + [f"{int(a)},{float(v)!r}" for a, v in zip(ages, curve)]
    _write_text(cfg, _out(cfg, f"age_curve_{cfg.position}.csv"), "\n".join(rows) + "\n")
    return {"lambda": lasso_cfg.lam, "active": len(lasso.active_set)}


def cmd_rank(cfg) -> dict:
    corpus = _corpus(cfg)[0]
    sec = cfg.section("rank")
    fd_path = cfg.path("data", "first_division")
    leagues = read_club_list(fd_path)
    kw = dict(horizon_days=int(sec.get("horizon_days", 365)),
              window_days=int(sec.get("window_days", 365)),
              tolerance_days=int(sec.get("tolerance_days", 90)),
              aliases=_aliases(cfg))
    train = build_young_table(corpus, leagues, **kw)
    candidates = build_young_table(corpus, leagues, require_target=False, **kw)
    if cfg.no_league_feature:
        train = train.drop_columns([LEAGUE_FEATURE])
        candidates = candidates.drop_columns([LEAGUE_FEATURE])
    model = _fit(cfg, train, cfg.model or sec.get("model", "lasso"))
    names = {pid: p.name for pid, p in corpus.profiles.items()}
    report = rank_players(model, candidates, names)
    ref_path = cfg.reference
    if ref_path is None:
        ref_path = cfg.path("rank", "reference", required=False)
    elif not os.path.exists(ref_path):
        raise ConfigError(f"no such reference file {ref_path}")
    payload = report.to_dict()
    if ref_path:
        reference = read_reference_ranking(ref_path)
        payload["kendall_tau"] = kendall_tau_on_reference(report.player_ids(), reference)
        payload["coverage"] = (f"tau over the {len(reference)} reference players only, "
                               f"in their predicted relative order")
    top = int(sec.get("top", 13))
    _write_json(cfg, _out(cfg, "ranking.json"), payload)
    _write_text(cfg, _out(cfg, "ranking.txt"), report.to_text(top))
    return {"ranked": len(report.entries), "kendall_tau": payload["kendall_tau"]}


def cmd_synth(cfg) -> dict:
    params = dict(cfg.section("synth"))
    params["seed"] = cfg.seed
    spec = SynthSpec.from_dict(params)
    data = generate_synthetic(spec, _aliases(cfg))
    header = cfg.header()
    write_corpus(data.corpus, cfg.out, data.top20_clubs, header)
    with open(_out(cfg, "first_division.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        fh.writelines(f"{league}\n" for league in sorted(data.first_division))
    truth = {"true_r2": data.true_r2, "noise_sd": data.noise_sd,
             "league_offsets": data.league_offsets}
    _write_json(cfg, _out(cfg, "synth_truth.json"), truth)
    return {"players": len(data.corpus.profiles), "true_r2": data.true_r2}


HANDLERS = {
    "ingest": cmd_ingest, "features": cmd_features, "train": cmd_train,
    "evaluate": cmd_evaluate, "importance": cmd_importance, "rank": cmd_rank,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="playervalue",
                                     description="Player market value pipeline.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="TOML run configuration")
    parser.add_argument("--position", help="position code, e.g. MD")
    parser.add_argument("--model", choices=MODELS)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--no-league-feature", action="store_true",
                        help="drop the league average value feature")
    parser.add_argument("--reference", help="rank,player_id CSV for Kendall's tau")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        summary = HANDLERS[args.command](cfg)
    except (PlayerValueError, OSError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
