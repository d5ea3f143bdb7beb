import itertools

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, strategies as st

from bpgwsp.ropetest import TestConfig, combine, rope_interval, single_outcome, Interval
from bpgwsp.prior import PriorSpec
from bpgwsp.simgen import GridConfig, build_grid
from bpgwsp.tune import (
    ROBUSTNESS_GROUPS,
    DecisionRecord,
    auc_one_threshold,
    balance_classes,
    build_report,
    config_grid,
    confusion,
    correct_belief_subset,
    decisions_from_fits,
    rank_configs,
    records_frame,
    robustness_report,
    stratified_auc,
)

KEY = TestConfig().key


def rec(truth, signal, belief="q1", true_quarter=None, n=500, adr=1.0, config=KEY, setting=0, rep=0):
    if true_quarter is None:
        true_quarter = {"none": 1, "q1": 1, "q2": 2, "q3": 3}[belief] if truth else 0
    return DecisionRecord(setting, rep, truth, signal, config, n=n, adr_rate=adr if truth else 0.0,
                          true_quarter=true_quarter, belief=belief, ess_min=5000.0)


def test_confusion_all_correct():
    records = [rec(True, True), rec(False, False), rec(True, True)]
    tp, fp, tn, fn = confusion(records)
    assert (tp, fp, tn, fn) == (2, 0, 1, 0)


def test_confusion_hand_tally():
    # 2 x 2 x 2: truth x signal x two copies
    records = [rec(t, s, rep=r) for t, s, r in itertools.product((True, False), (True, False), (0, 1))]
    assert confusion(records) == (2, 2, 2, 2)
    records = records[:-1]  # drop one (False, False)
    assert confusion(records) == (2, 2, 1, 2)


def test_confusion_label_inversion():
    rng = np.random.default_rng(0)
    truth = rng.random(50) < 0.4
    signal = rng.random(50) < 0.5
    a = confusion([rec(bool(t), bool(s)) for t, s in zip(truth, signal)])
    b = confusion([rec(bool(not t), bool(s)) for t, s in zip(truth, signal)])
    sens_a, spec_a = a[0] / (a[0] + a[3]), a[2] / (a[2] + a[1])
    sens_b, spec_b = b[0] / (b[0] + b[3]), b[2] / (b[2] + b[1])
    assert sens_b == pytest.approx(1 - spec_a)
    assert spec_b == pytest.approx(1 - sens_a)


def test_confusion_needs_both_classes():
    with pytest.raises(ValueError):
        confusion([rec(True, True)])
    with pytest.raises(ValueError):
        confusion([])


def test_weighted_confusion_equals_unweighted():
    records = [rec(t, s) for t, s in [(True, True), (True, False), (False, True), (False, False), (False, False)]]
    df = records_frame(records)
    assert confusion(df) == confusion(df.assign(weight=1.0)) == (1, 1, 2, 1)


def test_auc_examples():
    assert auc_one_threshold(1, 1) == 1.0
    assert auc_one_threshold(0.5, 0.5) == 0.5
    roc_x, roc_y = [0, 1 - 0.8, 1], [0, 0.9, 1]
    assert auc_one_threshold(0.9, 0.8) == pytest.approx(np.trapezoid(roc_y, roc_x))
    assert auc_one_threshold(0.9, 0.8) == pytest.approx(0.85)
    with pytest.raises(ValueError):
        auc_one_threshold(1.2, 0.5)


@given(a=st.floats(0, 1), b=st.floats(0, 1), c=st.floats(0, 1))
def test_auc_symmetric_and_affine(a, b, c):
    assert auc_one_threshold(a, b) == auc_one_threshold(b, a)
    # affine in the first argument
    assert auc_one_threshold(a, c) - auc_one_threshold(b, c) == pytest.approx((a - b) / 2, abs=1e-15)


def test_balance_default_grid():
    grid = build_grid(GridConfig())
    records = [rec(s.truth, False, belief=s.belief, setting=s.index) for s in grid.settings]
    df = balance_classes(records)
    assert set(df.loc[~df["truth"], "weight"]) == {6.0}
    assert set(df.loc[df["truth"], "weight"]) == {1.0}


def test_balance_ratios():
    balanced = balance_classes([rec(True, True)] * 3 + [rec(False, False)] * 3)
    assert set(balanced["weight"]) == {1.0}
    custom = balance_classes([rec(True, True)] * 10 + [rec(False, False)] * 5)
    assert set(custom.loc[~custom["truth"], "weight"]) == {2.0}
    by = balance_classes([rec(True, True, "q1")] * 4 + [rec(False, False, "q1")] * 2
                         + [rec(True, True, "q2")] * 3 + [rec(False, False, "q2")] * 3, by="belief")
    assert list(by.loc[~by["truth"], "weight"]) == [2.0, 2.0, 1.0, 1.0, 1.0]
    with pytest.raises(ValueError):
        balance_classes([rec(True, True)])


def random_stub(config, seed):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(400):
        truth = i < 200
        out.append(rec(truth, bool(rng.random() < 0.5), config=config, rep=i))
    return out


def test_random_config_has_auc_near_half():
    table = rank_configs(random_stub(KEY, 1))
    assert abs(table.loc[0, "auc"] - 0.5) <= 0.05


def test_identical_records_identical_auc():
    a = random_stub("0.80|0.80|hdi|2", 2)
    b = [DecisionRecord(**{**r.__dict__, "config": "0.60|0.60|eti|1"}) for r in a]
    table = rank_configs(a + b).set_index("config")
    assert table.loc["0.80|0.80|hdi|2", "auc"] == table.loc["0.60|0.60|eti|1", "auc"]


def test_rank_is_permutation_and_keeps_missing():
    configs = config_grid(levels=(0.7, 0.8), ci_types=("hdi",), rules=("option1", "option2"))
    have = [c.key for c in configs[:-1]]
    records = []
    for k, key in enumerate(have):
        records += [rec(True, True, config=key, rep=r) for r in range(5)]
        records += [rec(False, r < k, config=key, rep=r) for r in range(5)]
    table = rank_configs(records, configs)
    assert sorted(table["config"]) == sorted(c.key for c in configs)
    assert table["config"].is_unique
    assert list(table["rank"]) == list(range(1, len(configs) + 1))
    assert table.iloc[-1]["config"] == configs[-1].key and pd.isna(table.iloc[-1]["auc"])
    aucs = table["auc"].iloc[:-1].to_numpy(float)
    assert np.all(np.diff(aucs) <= 0)


def test_rank_single_config_and_ties():
    one = rank_configs(random_stub(KEY, 3))
    assert len(one) == 1
    a = random_stub("0.90|0.90|hdi|2", 4)
    tied = a + [DecisionRecord(**{**r.__dict__, "config": "0.50|0.90|hdi|2"}) for r in a]
    table = rank_configs(tied)
    assert list(table["config"]) == ["0.50|0.90|hdi|2", "0.90|0.90|hdi|2"]


def test_require_ess_filters():
    records = records_frame(random_stub(KEY, 5))
    records.loc[:99, "ess_min"] = 20_000
    kept = rank_configs(records, require_ess=10_000)
    assert kept.loc[0, "n_pos"] == 100


def test_correct_belief_subset():
    records = [rec(True, True, "q1", 1), rec(True, True, "q3", 1), rec(True, True, "none", 1),
               rec(False, False, "q1"), rec(False, False, "q3"), rec(False, False, "none")]
    subset = correct_belief_subset(records)
    assert list(zip(subset["truth"], subset["belief"])) == [(True, "q1"), (False, "q1")]


def test_robustness_offsets():
    records = [rec(True, True, "q3", true_quarter=1), rec(False, False, "q3")]
    table = robustness_report(records).set_index("group")
    assert list(table.index) == list(ROBUSTNESS_GROUPS)
    assert table.loc["two quarters off", "n_pos"] == 1
    assert table.loc["two quarters off", "auc"] == 1.0
    assert pd.isna(table.loc["correct", "auc"])


def test_identical_decisions_across_beliefs():
    # the decision depends on neither the belief nor the true quarter
    records = []
    for tq in (1, 2, 3):
        for r in range(15):
            for belief in ("none", "q1", "q2", "q3"):
                records.append(rec(True, r % 5 != 0, belief, tq, rep=r))
    for r in range(20):
        for belief in ("none", "q1", "q2", "q3"):
            records.append(rec(False, r % 4 == 0, belief, rep=r))
    table = robustness_report(records)
    assert table["auc"].nunique() == 1
    assert table["auc"].iloc[0] == pytest.approx((0.8 + 0.75) / 2)


def test_stratified_auc():
    records = []
    for n, ok in ((500, 0.6), (3000, 0.9)):
        for i in range(10):
            records.append(rec(True, i < 10 * ok, "q2", n=n, rep=i))
            records.append(rec(False, False, "q2", n=n, rep=i))
    table = stratified_auc(records, "n").set_index("level")
    assert table.loc[500, "auc"] == pytest.approx(0.8)
    assert table.loc[3000, "auc"] == pytest.approx(0.95)
    by_time = stratified_auc(records, "expected_time")
    assert list(by_time["n_neg"]) == [20]  # controls shared with the stratum
    with pytest.raises(ValueError):
        stratified_auc(records, "belief")


def fake_fit(setting, rep, truth, belief, ci_nu, ci_gamma, levels=(0.8,)):
    return {
        "setting": setting, "rep": rep, "truth": truth, "n": 500, "adr_rate": 1.0 if truth else 0.0,
        "true_quarter": 1 if truth else 0, "belief": belief, "family": "log-log-log",
        "levels": list(levels), "ess": {"nu": 900.0, "gamma": 800.0}, "rhat": {"nu": 1.0, "gamma": 1.01},
        "ci": {"nu": {"eti": [ci_nu] * len(levels), "hdi": [ci_nu] * len(levels)},
               "gamma": {"eti": [ci_gamma] * len(levels), "hdi": [ci_gamma] * len(levels)}},
    }


def test_decisions_from_fits_matches_scalar_logic():
    rng = np.random.default_rng(7)
    null = PriorSpec.from_family("log-log-log", (1, 1, 1))
    fits = []
    for i in range(40):
        a, b = sorted(rng.lognormal(0, 1.5, 2))
        c, d = sorted(rng.lognormal(0, 1.5, 2))
        fits.append(fake_fit(i, 0, i % 2 == 0, "q1", [a, b], [c, d]))
    configs = config_grid(levels=(0.8,))
    df = decisions_from_fits(fits, configs)
    assert len(df) == 40 * len(configs)
    for cfg in configs:
        rows = df[df["config"] == cfg.key].sort_values("setting")
        rope = rope_interval(null, "nu", cfg.rope_level)
        for fit, signal in zip(fits, rows["signal"]):
            o_nu = single_outcome(Interval(*fit["ci"]["nu"][cfg.ci_type][0]), rope)
            o_g = single_outcome(Interval(*fit["ci"]["gamma"][cfg.ci_type][0]), rope)
            assert signal == combine(o_nu, o_g, cfg.combination_rule)
    assert df["ess_min"].unique().tolist() == [800.0]


def test_decisions_skip_failed_fits():
    fits = [fake_fit(0, 0, True, "q1", [2, 3], [2, 3]), {"setting": 1, "rep": 0, "error": "init"}]
    assert len(decisions_from_fits(fits, [TestConfig()])) == 1
    assert decisions_from_fits([], [TestConfig()]).empty


def test_config_grid_sizes():
    assert len(config_grid()) == 600
    diag = config_grid(cross=False)
    assert len(diag) == 60
    assert all(c.rope_level == c.ci_level for c in diag)


def test_build_report():
    fits = []
    for i in range(30):
        truth = i < 20
        ci = [2.0, 3.0] if truth and i % 5 else [0.9, 1.1]
        fits.append(fake_fit(i, 0, truth, "q1", ci, ci))
    configs = config_grid(levels=(0.8,), ci_types=("hdi",))
    report = build_report(decisions_from_fits(fits, configs), configs)
    assert report.summary["chosen_config"] == KEY
    assert report.summary["n_configs"] == 3
    assert set(report.robustness["group"]) == set(ROBUSTNESS_GROUPS)
    assert report.ranking.loc[report.ranking["config"] == KEY, "auc"].iloc[0] == pytest.approx(0.9)
    assert isinstance(report.stratified, pd.DataFrame)
