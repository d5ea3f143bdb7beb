"""Command-line interface: ``bpgwsp simulate | fit | test | tune | report``.

Every option can also be given in a JSON file passed with ``--config``; keys
are the long option names with dashes replaced by underscores.  Explicit
flags override the file, which overrides the defaults.  The fully resolved
configuration is written to ``run.json`` in the output directory, and
``bpgwsp <command> --config run.json --out <dir>`` repeats the run.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .io import DataFormatError, dataset_to_csv, read_dataset, read_json, write_json, write_text
from .mcmc import ESS_TARGET, McmcInitError, McmcSettings, run_chains
from .pgw import TteDataset
from .prior import FAMILIES, PARAM_NAMES, PriorSpec, get_preset
from .ropetest import LEVEL_GRID, RULES, TestConfig, run_test
from .runner import RecordStore, run_sweep
from .simgen import GridConfig, Setting, build_grid, generate_sample, pair_seed
from .tune import build_report, config_grid, decisions_from_fits, rank_configs

__all__ = ["main", "DEFAULTS", "resolve_config", "build_prior", "render_decision", "render_tuning"]

log = logging.getLogger("bpgwsp")

COMMANDS = ("simulate", "fit", "test", "tune", "report")

DEFAULTS = {
    "input": None,
    "out": None,
    "seed": 20240101,
    "workers": None,
    "prior": "none",
    "horizon": None,
    "means": None,
    "prior_sd": 10.0,
    "null_sd": 10.0,
    "family": "log-log-log",
    "rope_level": 0.80,
    "ci_level": 0.80,
    "ci_type": "hdi",
    "rule": 2,
    "censor": None,
    "chains": 4,
    "iters": 10_000,
    "burnin": 1_000,
    "require_ess": None,
    "paper_literal_lognormal": False,
    # grid (simulate, tune)
    "n_levels": [500, 3000, 5000],
    "adr_levels": [0.5, 1.0],
    "expected_levels": [91.0, 183.0, 274.0],
    "beliefs": ["none", "q1", "q2", "q3"],
    "families": list(FAMILIES),
    "reps": 100,
    "background_rate": 0.1,
    "rel_sd": 0.05,
    "no_data": False,
    "no_controls": False,
    # tuning grid
    "manifest": None,
    "levels": list(LEVEL_GRID),
    "ci_types": ["eti", "hdi"],
    "rules": [1, 2, 3],
    "equal_levels_only": False,
    "limit": None,
}

_LIST_KEYS = {
    "means": float, "n_levels": int, "adr_levels": float, "expected_levels": float, "beliefs": str,
    "families": str, "levels": float, "ci_types": str, "rules": int,
}
_PATH_KEYS = ("input", "out", "manifest")


class CliError(Exception):
    """A user-facing error; the message is printed and the exit code is 1."""


# ---------------------------------------------------------------------------
# argument parsing

def _comma_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with option values (keys as in run.json)")
    p.add_argument("--out", default=S, help="output directory")
    p.add_argument("--seed", type=int, default=S, help="master seed (unsigned 64-bit)")
    p.add_argument("--workers", type=int, default=S, help="worker processes for sweeps (default: logical cores)")
    p.add_argument("-v", "--verbose", action="store_true", default=S, help="log progress to stderr")


def _add_prior(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--prior", choices=("none", "q1", "q2", "q3", "custom"), default=S,
                   help="belief preset for the prior means, or custom with --means")
    p.add_argument("--horizon", type=float, default=S,
                   help="observation horizon selecting the preset (default: the censoring time)")
    p.add_argument("--means", default=S, help="custom prior means theta,nu,gamma")
    p.add_argument("--prior-sd", type=float, default=S, help="prior standard deviation (default 10)")
    p.add_argument("--family", choices=tuple(FAMILIES), default=S, help="prior family (default log-log-log)")
    p.add_argument("--paper-literal-lognormal", action="store_true", default=S,
                   help="lognormal location log(m) - log(1 + sd^2/m^2) instead of the moment match")


def _add_test(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--rope-level", type=float, default=S, help="ROPE coverage of the null prior (default 0.80)")
    p.add_argument("--ci-level", type=float, default=S, help="posterior interval coverage (default 0.80)")
    p.add_argument("--ci-type", choices=("eti", "hdi"), default=S, help="posterior interval type (default hdi)")
    p.add_argument("--rule", type=int, choices=(1, 2, 3), default=S, help="combination rule (default 2)")
    p.add_argument("--null-sd", type=float, default=S, help="sd of the null prior defining the ROPE (default 10)")


def _add_mcmc(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--chains", type=int, default=S, help="number of chains (default 4)")
    p.add_argument("--iters", type=int, default=S, help="retained draws per chain (default 10000)")
    p.add_argument("--burnin", type=int, default=S, help="burn-in iterations per chain (default 1000)")


def _add_grid(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--n-levels", default=S, help="sample sizes, comma separated")
    p.add_argument("--adr-levels", default=S, help="ADR proportions of the background rate")
    p.add_argument("--expected-levels", default=S, help="expected ADR times in days")
    p.add_argument("--beliefs", default=S, help="belief presets analysed (none,q1,q2,q3)")
    p.add_argument("--families", default=S, help="prior families analysed")
    p.add_argument("--reps", type=int, default=S, help="repetitions per setting (default 100)")
    p.add_argument("--censor", type=float, default=S, help="observation horizon in days (default 365)")
    p.add_argument("--background-rate", type=float, default=S, help="background event rate (default 0.1)")
    p.add_argument("--rel-sd", type=float, default=S, help="ADR time sd as a fraction of the horizon")
    p.add_argument("--no-controls", action="store_true", default=S, help="omit the ADR-free control scenarios")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpgwsp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("simulate", help="generate the scenario grid and its cohorts")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--no-data", action="store_true", default=S, help="write the manifest only")

    for name, helptext in (("fit", "sample the posterior for one cohort"),
                           ("test", "run the signal test on one cohort")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input", nargs="?", default=S, help="cohort CSV with columns time,event")
        _add_common(p)
        _add_prior(p)
        _add_mcmc(p)
        p.add_argument("--censor", type=float, default=S,
                       help="censoring horizon (default: largest censored time)")
        if name == "test":
            _add_test(p)

    p = sub.add_parser("tune", help="evaluate test configurations over the scenario grid")
    _add_common(p)
    _add_grid(p)
    _add_mcmc(p)
    _add_test(p)
    p.add_argument("--prior-sd", type=float, default=S, help="prior standard deviation (default 10)")
    p.add_argument("--paper-literal-lognormal", action="store_true", default=S,
                   help="lognormal location without the factor 1/2")
    p.add_argument("--manifest", default=S, help="manifest.json from simulate (default: build the grid)")
    p.add_argument("--require-ess", type=float, default=S, help="drop fits whose minimum ESS is below this")
    p.add_argument("--levels", default=S, help="credibility levels evaluated for ROPE and CI")
    p.add_argument("--ci-types", default=S, help="posterior interval types evaluated (eti,hdi)")
    p.add_argument("--rules", default=S, help="combination rules evaluated (1,2,3)")
    p.add_argument("--equal-levels-only", action="store_true", default=S,
                   help="pair equal ROPE and CI levels only")
    p.add_argument("--limit", type=int, default=S, help=argparse.SUPPRESS)

    p = sub.add_parser("report", help="render decision, fit or tuning artifacts as text")
    p.add_argument("input", nargs="?", default=S, help="decision.json, diagnostics.json or a tune output directory")
    _add_common(p)
    return parser


# ---------------------------------------------------------------------------
# configuration

def _normalise(key: str, value):
    if value is None:
        return None
    if key in _LIST_KEYS:
        items = _comma_list(value) if isinstance(value, str) else list(value)
        try:
            return [_LIST_KEYS[key](v) for v in items]
        except (TypeError, ValueError):
            raise CliError(f"{key}: cannot parse {value!r}") from None
    if key in _PATH_KEYS:
        return str(Path(value).resolve())
    return value


def resolve_config(command: str, cli: dict) -> dict:
    """Merge defaults, the ``--config`` file and explicit flags."""
    cfg = dict(DEFAULTS)
    cli = dict(cli)
    cli.pop("verbose", None)
    path = cli.pop("config", None)
    if path is not None:
        try:
            loaded = read_json(path)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise CliError(f"{path}: config must be a JSON object")
        file_command = loaded.pop("command", command)
        if file_command != command:
            raise CliError(f"{path} is a {file_command!r} config, not {command!r}")
        loaded.pop("version", None)
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise CliError(f"{path}: unknown keys {', '.join(unknown)}")
        base = Path(path).resolve().parent
        for key in _PATH_KEYS:
            if loaded.get(key) is not None:
                loaded[key] = str((base / loaded[key]).resolve())
        cfg.update(loaded)
    cfg.update(cli)
    cfg = {k: _normalise(k, v) for k, v in cfg.items()}
    if cfg["workers"] is None:
        cfg["workers"] = os.cpu_count() or 1
    return cfg


def _mcmc_settings(cfg: dict, seed: int | None = None) -> McmcSettings:
    try:
        return McmcSettings(chains=int(cfg["chains"]), iters_per_chain=int(cfg["iters"]),
                            burn_in=int(cfg["burnin"]), seed=int(cfg["seed"] if seed is None else seed))
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _test_config(cfg: dict) -> TestConfig:
    try:
        return TestConfig(float(cfg["rope_level"]), float(cfg["ci_level"]), cfg["ci_type"],
                          cfg["rule"], float(cfg["null_sd"]))
    except ValueError as exc:
        raise CliError(str(exc)) from None


def build_prior(cfg: dict, censor_time: float) -> PriorSpec:
    """Prior from ``prior``/``means``/``horizon``/``family``/``prior_sd``."""
    prior, means = cfg["prior"], cfg["means"]
    if prior == "custom":
        if means is None or len(means) != 3:
            raise CliError("--prior custom needs --means theta,nu,gamma")
    elif means is not None:
        raise CliError("--means is only used with --prior custom")
    else:
        horizon = censor_time if cfg["horizon"] is None else float(cfg["horizon"])
        try:
            means = get_preset(prior, horizon).means
        except ValueError as exc:
            raise CliError(str(exc)) from None
    try:
        return PriorSpec.from_family(cfg["family"], means, float(cfg["prior_sd"]),
                                     bool(cfg["paper_literal_lognormal"]))
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _out_dir(cfg: dict) -> Path:
    if cfg["out"] is None:
        raise CliError("--out is required")
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise CliError(f"output directory {out} is not writable")
    return out


def _write_run(out: Path, command: str, cfg: dict) -> None:
    write_json(out / "run.json", {"command": command, "version": __version__, **cfg})


def _load_data(cfg: dict) -> TteDataset:
    if cfg["input"] is None:
        raise CliError("a cohort CSV is required")
    try:
        return read_dataset(cfg["input"], cfg["censor"])
    except FileNotFoundError:
        raise CliError(f"no such file: {cfg['input']}") from None
    except (DataFormatError, ValueError) as exc:
        raise CliError(str(exc)) from None


def _data_summary(data: TteDataset) -> dict:
    return {"records": len(data), "events": data.n_events, "censor_time": data.censor_time}


def _histogram(data: TteDataset, bins: int = 20) -> dict:
    counts, edges = np.histogram(data.times[data.events == 1], bins=bins, range=(0.0, data.censor_time))
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(cfg: dict) -> int:
    out = _out_dir(cfg)
    grid_cfg = _grid_config(cfg)
    grid = build_grid(grid_cfg)
    master = int(cfg["seed"])
    entries = []
    for s in grid.settings:
        for rep in range(grid.repetitions):
            seed = pair_seed(master, s.index, rep, 0)
            name = f"data/s{s.index:04d}_r{rep:03d}.csv"
            entries.append({"setting": s.index, "rep": rep, "seed": seed,
                            "file": None if cfg["no_data"] else name})
            if not cfg["no_data"]:
                write_text(out / name, dataset_to_csv(generate_sample(s.scenario, seed)))
    manifest = {
        "master_seed": master,
        "grid": grid_cfg.to_dict(),
        "n_settings": len(grid),
        "n_adr": grid.n_adr,
        "n_control": grid.n_control,
        "repetitions": grid.repetitions,
        "settings": [s.to_dict() for s in grid.settings],
        "entries": entries,
    }
    write_json(out / "manifest.json", manifest)
    _write_run(out, "simulate", cfg)
    print(f"{len(grid)} settings ({grid.n_adr} ADR, {grid.n_control} control) x {grid.repetitions} reps"
          f" -> {out / 'manifest.json'}")
    return 0


def _grid_config(cfg: dict) -> GridConfig:
    try:
        return GridConfig(
            n=tuple(cfg["n_levels"]), adr_rate=tuple(cfg["adr_levels"]),
            expected_time=tuple(cfg["expected_levels"]), beliefs=tuple(cfg["beliefs"]),
            families=tuple(cfg["families"]),
            censor_time=365.0 if cfg["censor"] is None else float(cfg["censor"]),
            background_rate=float(cfg["background_rate"]), rel_sd=float(cfg["rel_sd"]),
            repetitions=int(cfg["reps"]), include_controls=not cfg["no_controls"],
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _fit(cfg: dict, data: TteDataset, spec: PriorSpec):
    settings = _mcmc_settings(cfg)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            post = run_chains(data, spec, settings)
    except McmcInitError as exc:
        raise CliError(str(exc)) from None
    messages = [str(w.message) for w in caught]
    for name in post.names:
        if post.ess_of(name) < ESS_TARGET:
            messages.append(f"effective sample size of {name} is {post.ess_of(name):.0f} < {ESS_TARGET}")
    return post, messages


def cmd_fit(cfg: dict) -> int:
    out = _out_dir(cfg)
    data = _load_data(cfg)
    spec = build_prior(cfg, data.censor_time)
    post, messages = _fit(cfg, data, spec)
    draws = "".join([",".join(post.names) + "\n"] +
                    [",".join(repr(float(x)) for x in row) + "\n" for row in post.draws])
    write_text(out / "draws.csv", draws)
    write_json(out / "diagnostics.json", {**post.sidecar(), "prior": spec.to_dict(),
                                           "data": _data_summary(data), "warnings": messages})
    write_json(out / "timing.json", {"wall_time": post.wall_time})
    _write_run(out, "fit", cfg)
    for m in messages:
        print(f"warning: {m}", file=sys.stderr)
    print(f"{post.draws.shape[0]} draws of {', '.join(post.names)} -> {out / 'draws.csv'}")
    return 0


def cmd_test(cfg: dict) -> int:
    out = _out_dir(cfg)
    data = _load_data(cfg)
    spec = build_prior(cfg, data.censor_time)
    config = _test_config(cfg)
    post, _ = _fit(cfg, data, spec)
    try:
        decision = run_test(data, spec, settings=_mcmc_settings(cfg), config=config, posterior=post)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    result = decision.to_dict() | {"prior": spec.to_dict(), "data": _data_summary(data),
                                   "event_histogram": _histogram(data)}
    write_json(out / "decision.json", result)
    text = render_decision(result)
    write_text(out / "report.txt", text)
    write_json(out / "timing.json", {"wall_time": post.wall_time})
    _write_run(out, "test", cfg)
    for m in decision.warnings:
        print(f"warning: {m}", file=sys.stderr)
    print(text, end="")
    return 0


def _sweep_identity(cfg: dict, settings, reps: int, master: int) -> dict:
    return {
        "master_seed": master,
        "reps": reps,
        "settings": [s.to_dict() for s in settings],
        "mcmc": {k: cfg[k] for k in ("chains", "iters", "burnin")},
        "levels": cfg["levels"],
        "prior_sd": cfg["prior_sd"],
        "paper_literal_lognormal": cfg["paper_literal_lognormal"],
    }


def cmd_tune(cfg: dict) -> int:
    out = _out_dir(cfg)
    if cfg["manifest"] is not None:
        try:
            manifest = read_json(cfg["manifest"])
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read manifest {cfg['manifest']}: {exc}") from None
        settings = [Setting.from_dict(d) for d in manifest["settings"]]
        reps = int(manifest["repetitions"])
        master = int(manifest["master_seed"])
    else:
        grid = build_grid(_grid_config(cfg))
        settings, reps, master = list(grid.settings), grid.repetitions, int(cfg["seed"])
    chosen = _test_config(cfg)
    levels = [round(float(lv), 10) for lv in cfg["levels"]]
    try:
        configs = config_grid(levels, tuple(cfg["ci_types"]), tuple(RULES[r - 1] for r in cfg["rules"]),
                              cross=not cfg["equal_levels_only"])
    except (ValueError, IndexError, TypeError) as exc:
        raise CliError(f"invalid tuning grid: {exc}") from None

    identity = _sweep_identity(cfg, settings, reps, master)
    id_path = out / "sweep.json"
    if id_path.exists() and read_json(id_path) != json.loads(json.dumps(identity)):
        raise CliError(f"{out} holds records of a different sweep; use a fresh --out")
    write_json(id_path, identity)

    store = RecordStore(out / "records.jsonl")
    mcmc = _mcmc_settings(cfg, seed=0)
    fits = run_sweep(settings, reps, master, mcmc, store, levels, float(cfg["prior_sd"]),
                     bool(cfg["paper_literal_lognormal"]), workers=int(cfg["workers"]),
                     timings_path=out / "timings.jsonl", limit=cfg["limit"])
    store.compact({f["key"]: f for f in fits})
    expected = len(settings) * reps
    _write_run(out, "tune", cfg)
    if len(fits) < expected:
        print(f"{len(fits)}/{expected} fits stored; rerun the same command to resume", file=sys.stderr)
        return 0

    decisions = decisions_from_fits(fits, configs, float(cfg["null_sd"]), bool(cfg["paper_literal_lognormal"]))
    require_ess = None if cfg["require_ess"] is None else float(cfg["require_ess"])
    equal = [c for c in configs if math.isclose(c.rope_level, c.ci_level)]
    rankings, equal_rankings, strat, robust, summaries = [], [], [], [], {}
    for family in sorted(set(decisions["family"])):
        part = decisions[decisions["family"] == family]
        report = build_report(part, configs, chosen, require_ess)
        eq = rank_configs(part, equal, require_ess) if equal else report.ranking.iloc[0:0]
        for table, sink in ((report.ranking, rankings), (eq, equal_rankings),
                            (report.stratified, strat), (report.robustness, robust)):
            sink.append(table.assign(family=family))
        summary = dict(report.summary)
        hit = eq.index[eq["config"] == chosen.key] if len(eq) else []
        summary["chosen_rank_equal_levels"] = int(eq.loc[hit[0], "rank"]) if len(hit) else None
        summary["chosen_auc"] = _chosen_auc(report.ranking, chosen.key)
        summary["stratified"] = report.stratified.to_dict("records")
        summary["robustness"] = report.robustness.to_dict("records")
        summaries[family] = summary
    errors = sum(1 for f in fits if f.get("error"))
    _write_csv(out / "ranking.csv", rankings)
    _write_csv(out / "ranking_equal_levels.csv", equal_rankings)
    _write_csv(out / "stratified.csv", strat)
    _write_csv(out / "robustness.csv", robust)
    write_json(out / "summary.json", _jsonable({"chosen_config": chosen.key, "fits": len(fits),
                                                "failed_fits": errors, "families": summaries}))
    text = render_tuning(out)
    write_text(out / "report.txt", text)
    print(text, end="")
    return 0


def _chosen_auc(ranking: pd.DataFrame, key: str):
    row = ranking[ranking["config"] == key]
    return None if row.empty or pd.isna(row["auc"].iloc[0]) else float(row["auc"].iloc[0])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_csv(path: Path, frames) -> None:
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    if "family" in table:
        table = table[["family"] + [c for c in table.columns if c != "family"]]
    write_text(path, table.to_csv(index=False))


def cmd_report(cfg: dict) -> int:
    if cfg["input"] is None:
        raise CliError("report needs an artifact path")
    path = Path(cfg["input"])
    if not path.exists():
        raise CliError(f"no such file or directory: {path}")
    if path.is_dir():
        if not (path / "summary.json").exists():
            raise CliError(f"{path} has no summary.json")
        text = render_tuning(path)
    else:
        try:
            data = read_json(path)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read {path}: {exc}") from None
        if "signal" in data:
            text = render_decision(data)
        elif "ess" in data:
            text = render_diagnostics(data)
        elif "families" in data:
            text = render_tuning(path.parent)
        else:
            raise CliError(f"{path}: not a decision, diagnostics or tuning summary")
    if cfg["out"] is not None:
        out = _out_dir(cfg)
        write_text(out / "report.txt", text)
        _write_run(out, "report", cfg)
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# rendering

def _fmt(x) -> str:
    return f"{x:.6g}"


def _interval(iv) -> str:
    return f"[{_fmt(iv[0])}, {_fmt(iv[1])}]"


def render_decision(d: dict) -> str:
    """Plain-text report for a ``decision.json`` payload."""
    lines = ["BPgWSP signal test", "=" * 18]
    data = d.get("data")
    if data:
        lines.append(f"data:    {data['records']} records, {data['events']} events, "
                     f"censored at {_fmt(data['censor_time'])} days")
    prior = d.get("prior")
    if prior:
        spec = PriorSpec.from_dict(prior)
        means = ", ".join(f"{n}={_fmt(m)}" for n, m in zip(PARAM_NAMES, spec.means))
        lines.append(f"prior:   {spec.family_name}, means {means}, sd {_fmt(spec.nu.sd)}")
    cfg = d.get("config")
    if cfg:
        lines.append(f"test:    ROPE {cfg['rope_level']:.0%} ETI of the null prior, "
                     f"CI {cfg['ci_level']:.0%} {cfg['ci_type'].upper()}, rule {cfg['combination_rule']}")
    lines.append("")
    lines.append(f"{'param':<7}{'ROPE':<26}{'CI':<26}outcome")
    for name in ("nu", "gamma"):
        lines.append(f"{name:<7}{_interval(d['rope_' + name]):<26}{_interval(d['ci_' + name]):<26}"
                     f"{d['outcome_' + name]}")
    lines.append("")
    lines.append(f"decision: {'signal' if d['signal'] else 'no signal'}")
    diag = d.get("diagnostics") or {}
    if diag.get("ess"):
        names = _ordered(diag["ess"])
        lines.append("ESS:      " + ", ".join(f"{k}={diag['ess'][k]:.0f}" for k in names))
        lines.append("R-hat:    " + ", ".join(f"{k}={diag['rhat'][k]:.4f}" for k in names))
    if d.get("warnings"):
        lines.append("warnings:")
        lines.extend(f"  - {w}" for w in d["warnings"])
    hist = d.get("event_histogram")
    if hist:
        lines.append("")
        lines.append(f"event times ({len(hist['counts'])} bins over (0, {_fmt(hist['edges'][-1])}]):")
        top = max(hist["counts"]) or 1
        for lo, hi, c in zip(hist["edges"][:-1], hist["edges"][1:], hist["counts"]):
            bar = "#" * round(40 * c / top)
            lines.append(f"  {lo:8.1f} - {hi:8.1f} | {c:6d} {bar}")
    return "\n".join(lines) + "\n"


def _ordered(by_name: dict) -> list:
    # JSON files are written with sorted keys; present parameters in model order
    return [n for n in PARAM_NAMES if n in by_name]


def render_diagnostics(d: dict) -> str:
    lines = ["posterior sample", "=" * 16, f"rows: {d['rows']} from {d['chains']} chains"]
    for name in _ordered(d["ess"]):
        lines.append(f"{name:<7} ESS {d['ess'][name]:10.1f}   R-hat {d['rhat'][name]:.4f}")
    fixed = d.get("fixed") or {}
    for name in _ordered(fixed):
        value = fixed[name]
        lines.append(f"{name:<7} fixed at {_fmt(value)}")
    lines.append("acceptance: " + ", ".join(f"{a:.3f}" for a in d["accept_rate"]))
    if d.get("warnings"):
        lines.append("warnings:")
        lines.extend(f"  - {w}" for w in d["warnings"])
    return "\n".join(lines) + "\n"


def _table(df: pd.DataFrame) -> str:
    if df.empty:
        return "  (empty)"
    return df.to_string(index=False, float_format=lambda x: f"{x:.3f}", na_rep="n/a")


def render_tuning(out: Path) -> str:
    """Text tables from a ``tune`` output directory."""
    out = Path(out)
    summary = read_json(out / "summary.json")
    ranking = pd.read_csv(out / "ranking.csv")
    equal = pd.read_csv(out / "ranking_equal_levels.csv")
    strat = pd.read_csv(out / "stratified.csv")
    robust = pd.read_csv(out / "robustness.csv")
    cols = ["rank", "rope", "ci", "rule", "auc", "sensitivity", "specificity"]
    lines = [f"Tuning report ({summary['fits']} fits, chosen configuration {summary['chosen_config']})", ""]
    for family, s in summary["families"].items():
        lines.append(f"== {family} ==")
        auc = "n/a" if s["chosen_auc"] is None else f"{s['chosen_auc']:.3f}"
        lines.append(f"chosen: AUC {auc}, rank {s['chosen_rank']} of {s['n_configs']}"
                     f" (equal levels: rank {s['chosen_rank_equal_levels']})")
        lines.append("")
        lines.append("Top ten, equal ROPE and CI levels:")
        lines.append(_table(equal[equal["family"] == family][cols].head(10)))
        lines.append("")
        lines.append("Top ten, all configurations:")
        lines.append(_table(ranking[ranking["family"] == family][cols].head(10)))
        lines.append("")
        lines.append("AUC of the chosen configuration by stratum:")
        lines.append(_table(strat[strat["family"] == family][["factor", "level", "auc", "n_pos", "n_neg"]]))
        lines.append("")
        lines.append("AUC by prior belief versus true ADR quarter:")
        lines.append(_table(robust[robust["family"] == family][["group", "auc", "n_pos", "n_neg"]]))
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------

_HANDLERS = {"simulate": cmd_simulate, "fit": cmd_fit, "test": cmd_test, "tune": cmd_tune, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    logging.basicConfig(level=logging.INFO if args.get("verbose") else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(command, args)
        return _HANDLERS[command](cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
