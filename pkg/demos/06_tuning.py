"""
Tuning the test
===============

A small sweep: fit once per (setting, repetition), then score every test
configuration (ROPE level, CI level, CI type, combination rule) by the AUC of
its single operating point. The full study runs through ``bpgwsp tune``.
"""

from bpgwsp.mcmc import McmcSettings
from bpgwsp.ropetest import LEVEL_GRID, TestConfig
from bpgwsp.runner import fit_setting
from bpgwsp.simgen import GridConfig, build_grid
from bpgwsp.tune import build_report, config_grid, decisions_from_fits

grid = build_grid(GridConfig(n=(3000,), adr_rate=(1.0,), expected_time=(91.0,), beliefs=("q1",),
                             families=("log-log-log",), repetitions=3))
mcmc = McmcSettings(iters_per_chain=1000, burn_in=500)
# fit_setting returns (record, wall time)
fits = [fit_setting(s, rep, 7, mcmc, LEVEL_GRID)[0] for s in grid.settings for rep in range(grid.repetitions)]

configs = config_grid(cross=False)
report = build_report(decisions_from_fits(fits, configs), configs, TestConfig())
print(report.ranking.head(5).to_string(index=False))
print(report.summary)
