"""Evaluation of test configurations over simulated decisions.

Decisions are kept in a :class:`pandas.DataFrame` with one row per
(setting, repetition, configuration).  The one-threshold AUC of a set of
decisions is ``(sensitivity + specificity) / 2``; the negative class is
reweighted so both classes carry equal total weight.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .prior import BELIEF_QUARTER, PriorSpec
from .ropetest import LEVEL_GRID, RULES, TestConfig, rope_interval

__all__ = [
    "DecisionRecord",
    "TuningReport",
    "records_frame",
    "confusion",
    "auc_one_threshold",
    "balance_classes",
    "correct_belief_subset",
    "config_grid",
    "decisions_from_fits",
    "rank_configs",
    "stratified_auc",
    "robustness_report",
    "build_report",
    "ROBUSTNESS_GROUPS",
]

ROBUSTNESS_GROUPS = ("correct", "one quarter off", "two quarters off", "none assumed")
_OUTCOME_CODES = {"accepted": 0, "rejected": 1, "undecided": 2}


@dataclass
class DecisionRecord:
    setting: int
    rep: int
    truth: bool
    signal: bool
    config: str
    n: int = 0
    adr_rate: float = 0.0
    true_quarter: int = 0
    belief: str = "none"
    family: str = "log-log-log"
    ess_min: float = math.nan
    rhat_max: float = math.nan
    weight: float = 1.0


def records_frame(records) -> pd.DataFrame:
    """Accept a DataFrame or an iterable of :class:`DecisionRecord`."""
    if isinstance(records, pd.DataFrame):
        return records
    return pd.DataFrame([asdict(r) for r in records])


def _weights(df: pd.DataFrame) -> np.ndarray:
    return df["weight"].to_numpy(float) if "weight" in df else np.ones(len(df))


def confusion(records) -> tuple[float, float, float, float]:
    """Weighted ``(tp, fp, tn, fn)`` for the decisions of one configuration."""
    df = records_frame(records)
    if len(df) == 0:
        raise ValueError("no records")
    truth = df["truth"].to_numpy(bool)
    if truth.all() or not truth.any():
        raise ValueError("both classes must be present to evaluate a configuration")
    signal = df["signal"].to_numpy(bool)
    w = _weights(df)
    tp = float(w[truth & signal].sum())
    fn = float(w[truth & ~signal].sum())
    fp = float(w[~truth & signal].sum())
    tn = float(w[~truth & ~signal].sum())
    return tp, fp, tn, fn


def auc_one_threshold(sensitivity: float, specificity: float) -> float:
    """Area under the ROC polyline through (0,0), (1-spec, sens), (1,1)."""
    for name, v in (("sensitivity", sensitivity), ("specificity", specificity)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
    return (sensitivity + specificity) / 2.0


def balance_classes(records, by=None) -> pd.DataFrame:
    """Reweight negatives so that each class carries the same total weight.

    With ``by`` (a column name) the balancing is done within each cell of that
    column; cells without positives drop their negatives, and cells without
    negatives keep their positives unmatched.
    """
    df = records_frame(records).copy()
    truth = df["truth"].to_numpy(bool)
    if truth.all() or not truth.any():
        raise ValueError("both classes must be present")
    weight = np.ones(len(df))
    if by is None:
        weight[~truth] = truth.sum() / (~truth).sum()
    else:
        keys = df[by].to_numpy()
        for key in pd.unique(keys):
            cell = keys == key
            n_pos = (cell & truth).sum()
            n_neg = (cell & ~truth).sum()
            if n_neg:
                weight[cell & ~truth] = n_pos / n_neg
    df["weight"] = weight
    return df


def _auc_row(df: pd.DataFrame) -> dict:
    tp, fp, tn, fn = confusion(df)
    sens = tp / (tp + fn)
    spec = tn / (tn + fp)
    return {
        "auc": auc_one_threshold(sens, spec),
        "sensitivity": sens,
        "specificity": spec,
        "n_pos": int(df["truth"].sum()),
        "n_neg": int((~df["truth"].astype(bool)).sum()),
    }


def _auc_or_none(df: pd.DataFrame, by="belief") -> dict:
    truth = df["truth"].to_numpy(bool)
    if len(df) == 0 or truth.all() or not truth.any():
        return {"auc": None, "sensitivity": None, "specificity": None,
                "n_pos": int(truth.sum()), "n_neg": int((~truth).sum())}
    balanced = balance_classes(df, by=by)
    balanced = balanced[balanced["weight"] > 0]
    if balanced["truth"].all() or not balanced["truth"].any():
        return {"auc": None, "sensitivity": None, "specificity": None,
                "n_pos": int(truth.sum()), "n_neg": 0}
    return _auc_row(balanced)


def _belief_quarter(df: pd.DataFrame) -> np.ndarray:
    return df["belief"].map(BELIEF_QUARTER).to_numpy(int)


def correct_belief_subset(records) -> pd.DataFrame:
    """ADR decisions made under the correct belief, plus the controls analysed under the same beliefs."""
    df = records_frame(records)
    bq = _belief_quarter(df)
    truth = df["truth"].to_numpy(bool)
    pos = truth & (bq == df["true_quarter"].to_numpy(int)) & (bq > 0)
    beliefs = set(df.loc[pos, "belief"])
    neg = ~truth & df["belief"].isin(beliefs).to_numpy()
    return df[pos | neg]


def config_grid(levels=LEVEL_GRID, ci_types=("eti", "hdi"), rules=RULES, cross: bool = True) -> list[TestConfig]:
    """Configurations to evaluate; ``cross=False`` pairs equal ROPE and CI levels only."""
    pairs = itertools.product(levels, levels) if cross else ((lv, lv) for lv in levels)
    return [
        TestConfig(rope, ci, ci_type, rule)
        for (rope, ci), ci_type, rule in itertools.product(pairs, ci_types, rules)
    ]


def _outcome_codes(ci: np.ndarray, rope: np.ndarray) -> np.ndarray:
    # ci (..., 2) vs rope (..., 2), broadcastable; codes as in _OUTCOME_CODES
    inside = (rope[..., 0] <= ci[..., 0]) & (ci[..., 1] <= rope[..., 1])
    disjoint = (ci[..., 1] < rope[..., 0]) | (ci[..., 0] > rope[..., 1])
    return np.where(inside, 0, np.where(disjoint, 1, 2))


def _signal_lookup() -> np.ndarray:
    from .ropetest import COMBINATION_TABLE, InterimOutcome

    table = np.zeros((3, 3, 3), dtype=bool)  # [rule, code_nu, code_gamma]
    for (o_nu, o_gamma), signals in COMBINATION_TABLE.items():
        for r, s in enumerate(signals):
            table[r, _OUTCOME_CODES[InterimOutcome(o_nu).value], _OUTCOME_CODES[InterimOutcome(o_gamma).value]] = s
    return table


def rope_table(family: str, levels, null_sd: float = 10.0, paper_literal: bool = False) -> np.ndarray:
    """ROPE bounds per level for nu and gamma, shape ``(2, len(levels), 2)``."""
    null = PriorSpec.from_family(family, (1.0, 1.0, 1.0), sd=null_sd, paper_literal_lognormal=paper_literal)
    return np.array([[rope_interval(null, which, lv).as_list() for lv in levels] for which in ("nu", "gamma")])


def decisions_from_fits(fits: list[dict], configs: list[TestConfig], null_sd: float = 10.0,
                        paper_literal: bool = False) -> pd.DataFrame:
    """Expand stored fit records (credible intervals per level) into decision rows.

    Each fit record carries ``levels`` and ``ci[param][ci_type]`` as a list of
    ``[lo, hi]`` per level; see :mod:`bpgwsp.runner`.
    """
    fits = [f for f in fits if not f.get("error")]
    if not fits:
        return pd.DataFrame(columns=[f.name for f in DecisionRecord.__dataclass_fields__.values()])
    levels = [round(float(x), 10) for x in fits[0]["levels"]]
    level_index = {lv: i for i, lv in enumerate(levels)}
    lookup = _signal_lookup()
    ropes = {}
    frames = []
    for family in sorted({f["family"] for f in fits}):
        group = [f for f in fits if f["family"] == family]
        if family not in ropes:
            ropes[family] = rope_table(family, levels, null_sd, paper_literal)
        rope = ropes[family]
        ci = {
            (p, t): np.array([f["ci"][p][t] for f in group], dtype=float)  # (F, L, 2)
            for p in ("nu", "gamma") for t in ("eti", "hdi")
        }
        meta = pd.DataFrame({
            "setting": [f["setting"] for f in group],
            "rep": [f["rep"] for f in group],
            "truth": [bool(f["truth"]) for f in group],
            "n": [f["n"] for f in group],
            "adr_rate": [f["adr_rate"] for f in group],
            "true_quarter": [f["true_quarter"] for f in group],
            "belief": [f["belief"] for f in group],
            "family": family,
            "ess_min": [min(f["ess"].values()) for f in group],
            "rhat_max": [max(f["rhat"].values()) for f in group],
        })
        for cfg in configs:
            ri = level_index[round(cfg.rope_level, 10)]
            ci_i = level_index[round(cfg.ci_level, 10)]
            code_nu = _outcome_codes(ci[("nu", cfg.ci_type)][:, ci_i, :], rope[0, ri])
            code_gamma = _outcome_codes(ci[("gamma", cfg.ci_type)][:, ci_i, :], rope[1, ri])
            signal = lookup[RULES.index(cfg.combination_rule), code_nu, code_gamma]
            frame = meta.copy()
            frame["signal"] = signal
            frame["config"] = cfg.key
            frames.append(frame)
    out = pd.concat(frames, ignore_index=True)
    out["weight"] = 1.0
    return out


def _config_sort_key(key: str):
    cfg = TestConfig.from_key(key)
    return (cfg.rope_level, cfg.ci_level, cfg.ci_type, cfg.combination_rule)


def rank_configs(records, configs=None, require_ess: float | None = None) -> pd.DataFrame:
    """Configurations ranked by AUC on the correct-belief subset.

    ``configs`` lists the expected configuration keys; any without decisions
    are kept with an empty AUC at the bottom.  Ties are broken by
    ``(rope_level, ci_level, ci_type, rule)``.
    """
    df = records_frame(records)
    if require_ess is not None:
        df = df[df["ess_min"] >= require_ess]
    subset = correct_belief_subset(df)
    keys = [c.key if isinstance(c, TestConfig) else c for c in configs] if configs else sorted(set(df["config"]))
    rows = []
    grouped = dict(tuple(subset.groupby("config"))) if len(subset) else {}
    for key in keys:
        part = grouped.get(key)
        stats = _auc_or_none(part) if part is not None else _auc_or_none(subset.iloc[0:0])
        cfg = TestConfig.from_key(key)
        rows.append({"config": key, "rope": f"{cfg.rope_level:.0%} ETI",
                     "ci": f"{cfg.ci_level:.0%} {cfg.ci_type.upper()}",
                     "rule": cfg.combination_rule, **stats})
    table = pd.DataFrame(rows)
    has = table["auc"].notna()
    ranked = sorted(table[has].to_dict("records"), key=lambda r: (-r["auc"], _config_sort_key(r["config"])))
    missing = sorted(table[~has].to_dict("records"), key=lambda r: _config_sort_key(r["config"]))
    out = pd.DataFrame(ranked + missing, columns=table.columns)
    out.insert(0, "rank", range(1, len(out) + 1))
    return out


def stratified_auc(records, factor: str) -> pd.DataFrame:
    """AUC per level of ``n``, ``adr_proportion`` or ``expected_time`` (one configuration).

    Controls have no ADR proportion or event time, so they are shared by every
    stratum of those factors; for ``n`` they are split by sample size.
    """
    df = correct_belief_subset(records_frame(records))
    truth = df["truth"].to_numpy(bool)
    if factor == "n":
        column = "n"
    elif factor == "adr_proportion":
        column = "adr_rate"
    elif factor == "expected_time":
        column = "true_quarter"
    else:
        raise ValueError(f"unknown factor {factor!r}")
    rows = []
    for level in sorted(set(df.loc[truth, column])):
        pos = truth & (df[column].to_numpy() == level)
        if column == "n":
            neg = ~truth & (df["n"].to_numpy() == level)
        else:
            neg = ~truth & df["belief"].isin(set(df.loc[pos, "belief"])).to_numpy()
        rows.append({"factor": factor, "level": level, **_auc_or_none(df[pos | neg])})
    return pd.DataFrame(rows)


def robustness_report(records) -> pd.DataFrame:
    """AUC by distance between the assumed and the true ADR quarter (one configuration)."""
    df = records_frame(records)
    truth = df["truth"].to_numpy(bool)
    bq = _belief_quarter(df)
    tq = df["true_quarter"].to_numpy(int)
    rows = []
    for offset, name in enumerate(ROBUSTNESS_GROUPS[:3]):
        pos = truth & (bq > 0) & (np.abs(bq - tq) == offset)
        neg = ~truth & df["belief"].isin(set(df.loc[pos, "belief"])).to_numpy()
        rows.append({"group": name, **_auc_or_none(df[pos | neg])})
    none = df["belief"].to_numpy() == "none"
    rows.append({"group": "none assumed", **_auc_or_none(df[none])})
    return pd.DataFrame(rows)


@dataclass
class TuningReport:
    ranking: pd.DataFrame
    stratified: pd.DataFrame
    robustness: pd.DataFrame
    config: str
    summary: dict = field(default_factory=dict)


def build_report(decisions: pd.DataFrame, configs, chosen: TestConfig = TestConfig(),
                 require_ess: float | None = None) -> TuningReport:
    """Ranking over all configurations plus stratified and robustness tables for ``chosen``."""
    ranking = rank_configs(decisions, configs, require_ess)
    df = decisions if require_ess is None else decisions[decisions["ess_min"] >= require_ess]
    chosen_df = df[df["config"] == chosen.key]
    stratified = pd.concat([stratified_auc(chosen_df, f) for f in ("n", "adr_proportion", "expected_time")],
                           ignore_index=True)
    robustness = robustness_report(chosen_df)
    top = ranking.iloc[0].to_dict() if len(ranking) else {}
    summary = {
        "chosen_config": chosen.key,
        "chosen_rank": int(ranking.index[ranking["config"] == chosen.key][0]) + 1
        if (ranking["config"] == chosen.key).any() else None,
        "top_config": top.get("config"),
        "top_auc": top.get("auc"),
        "n_configs": int(len(ranking)),
        "n_decisions": int(len(df)),
        "ess_below_target": int((df["ess_min"] < 10_000).sum()),
    }
    return TuningReport(ranking, stratified, robustness, chosen.key, summary)
