"""
The simulation grid
===================

Sample sizes, ADR proportions and ADR timings are crossed with belief
presets and prior families; controls without an ADR are added per sample
size. Each (setting, repetition) pair gets its own seed.
"""

import numpy as np

from bpgwsp.simgen import GridConfig, build_grid, generate_sample, pair_seed

grid = build_grid(GridConfig())
print(f"{len(grid)} settings: {grid.n_adr} with an ADR, {grid.n_control} controls")

one_family = build_grid(GridConfig(families=("log-log-log",), repetitions=20))
print(f"one family: {len(one_family)} settings x {one_family.repetitions} reps")

s = one_family.settings[0]
data = generate_sample(s.scenario, pair_seed(20240101, s.index, 0))
print(s.scenario, s.belief)
print(f"events {data.events.sum()} of {len(data)}, median event day {np.median(data.times[data.events == 1]):.0f}")
