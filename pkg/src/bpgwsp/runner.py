"""Grid sweep execution with a resumable line-delimited JSON record store.

Each (setting, repetition) pair is simulated, fitted once, and reduced to
the ETI and HDI of nu and gamma at every credibility level of the tuning
grid.  Test decisions for any configuration are derived from these
intervals afterwards (:func:`bpgwsp.tune.decisions_from_fits`).
"""
from __future__ import annotations

import json
import logging
import multiprocessing
import os
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .mcmc import McmcInitError, McmcSettings, run_chains
from .prior import PriorSpec, get_preset
from .ropetest import LEVEL_GRID, _hdi_sorted
from .simgen import Setting, generate_sample, pair_seed

__all__ = ["fit_setting", "RecordStore", "run_sweep", "record_key"]

log = logging.getLogger(__name__)


def record_key(setting_index: int, rep: int) -> str:
    return f"{setting_index}:{rep}"


def _intervals(draws: np.ndarray, levels) -> dict:
    x = np.sort(draws)
    q = np.quantile(x, [p for lv in levels for p in ((1 - lv) / 2, (1 + lv) / 2)]).reshape(-1, 2)
    return {
        "eti": [[float(lo), float(hi)] for lo, hi in q],
        "hdi": [_hdi_sorted(x, lv).as_list() for lv in levels],
    }


def fit_setting(setting: Setting, rep: int, master_seed: int, mcmc: McmcSettings,
                levels=LEVEL_GRID, prior_sd: float = 10.0, paper_literal: bool = False):
    """Simulate and fit one (setting, repetition); returns ``(record, wall_time)``."""
    scen = setting.scenario
    data_seed = pair_seed(master_seed, setting.index, rep, 0)
    data = generate_sample(scen, data_seed)
    means = get_preset(setting.belief, scen.censor_time).means
    spec = PriorSpec.from_family(setting.family, means, prior_sd, paper_literal)
    settings = replace(mcmc, seed=pair_seed(master_seed, setting.index, rep, 1))
    record = {
        "key": record_key(setting.index, rep),
        "setting": setting.index,
        "rep": rep,
        "seed": data_seed,
        "family": setting.family,
        "belief": setting.belief,
        "n": scen.n,
        "adr_rate": scen.adr_rate,
        "expected_time": scen.expected_time,
        "censor_time": scen.censor_time,
        "truth": setting.truth,
        "true_quarter": setting.true_quarter,
        "n_events": data.n_events,
        "levels": list(levels),
    }
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            post = run_chains(data, spec, settings)
    except McmcInitError as exc:
        record["error"] = str(exc)
        return record, 0.0
    record["ci"] = {name: _intervals(post.column(name), levels) for name in ("nu", "gamma")}
    record["ess"] = {name: float(post.ess_of(name)) for name in ("nu", "gamma")}
    record["rhat"] = {name: float(post.rhat_of(name)) for name in ("nu", "gamma")}
    return record, post.wall_time


class RecordStore:
    """Append-only JSONL store keyed by ``"setting:rep"``.

    A truncated final line (from an interrupted run) is ignored on load and
    the pair is recomputed.
    """

    def __init__(self, path):
        self.path = Path(path)

    def load(self) -> dict:
        records = {}
        if not self.path.exists():
            return records
        with open(self.path) as fh:
            for line in fh:
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue
                records[rec["key"]] = rec
        return records

    def compact(self, records: dict) -> None:
        """Rewrite the store with only complete records, ordered by key."""
        tmp = self.path.with_suffix(".tmp")
        with open(tmp, "w") as fh:
            for rec in sorted(records.values(), key=lambda r: (r["setting"], r["rep"])):
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        os.replace(tmp, self.path)

    def append(self, record: dict) -> None:
        with open(self.path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            fh.flush()


def _task(args):
    return fit_setting(*args)


def run_sweep(settings, reps: int, master_seed: int, mcmc: McmcSettings, store: RecordStore,
              levels=LEVEL_GRID, prior_sd: float = 10.0, paper_literal: bool = False,
              workers: int = 1, timings_path=None, limit: int | None = None) -> list[dict]:
    """Fit every (setting, rep) pair not yet in ``store``; returns all records in order.

    ``limit`` stops after that many new fits (used to simulate interruption).
    """
    done = store.load()
    store.compact(done)
    todo = [
        (s, r, master_seed, mcmc, tuple(levels), prior_sd, paper_literal)
        for s in settings for r in range(reps)
        if record_key(s.index, r) not in done
    ]
    if limit is not None:
        todo = todo[:limit]
    log.info("%d fits done, %d to run", len(done), len(todo))
    timing_fh = open(timings_path, "a") if timings_path else None
    try:
        if workers > 1 and len(todo) > 1:
            with multiprocessing.get_context("spawn").Pool(workers) as pool:
                results = pool.imap(_task, todo, chunksize=1)
                _drain(results, todo, store, done, timing_fh)
        else:
            _drain(map(_task, todo), todo, store, done, timing_fh)
    finally:
        if timing_fh:
            timing_fh.close()
    return sorted(done.values(), key=lambda r: (r["setting"], r["rep"]))


def _drain(results, todo, store, done, timing_fh):
    for i, (record, wall) in enumerate(results, 1):
        store.append(record)
        done[record["key"]] = record
        if timing_fh:
            timing_fh.write(json.dumps({"key": record["key"], "wall_time": wall}) + "\n")
        if i % 50 == 0 or i == len(todo):
            log.info("completed %d/%d fits", i, len(todo))
