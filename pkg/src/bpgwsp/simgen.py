"""Synthetic cohorts and the scenario grid of the tuning study.

A cohort of ``n`` subjects mixes uniformly timed background events, normally
timed ADR events clustered around an expected time, and subjects censored at
the end of the observation period.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .pgw import TteDataset
from .prior import FAMILIES

__all__ = [
    "ScenarioSpec",
    "Setting",
    "ScenarioGrid",
    "GridConfig",
    "generate_sample",
    "simulate_components",
    "build_grid",
    "pair_seed",
    "quarter_index",
]


@dataclass(frozen=True)
class ScenarioSpec:
    n: int
    censor_time: float = 365.0
    background_rate: float = 0.1
    adr_rate: float = 0.0
    expected_time: float | None = None
    rel_sd: float = 0.05

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.censor_time > 0:
            raise ValueError("censor_time must be positive")
        if not 0.0 < self.background_rate < 1.0:
            raise ValueError("background_rate must lie in (0, 1)")
        if not 0.0 <= self.adr_rate <= 1.0:
            raise ValueError("adr_rate must lie in [0, 1]")
        if self.adr_rate > 0:
            if self.expected_time is None:
                raise ValueError("expected_time is required when adr_rate > 0")
            if not 0 < self.expected_time < self.censor_time:
                raise ValueError("expected_time must lie in (0, censor_time)")
        if not self.rel_sd > 0:
            raise ValueError("rel_sd must be positive")

    @property
    def has_adr(self) -> bool:
        return self.adr_rate > 0

    def to_dict(self) -> dict:
        return asdict(self)


def quarter_index(expected_time: float | None, censor_time: float) -> int:
    """Quarter of the observation period (1, 2, 3) holding ``expected_time``; 0 if none."""
    if expected_time is None:
        return 0
    return int(round(4.0 * expected_time / censor_time))


def simulate_components(s: ScenarioSpec, seed) -> tuple[np.ndarray, np.ndarray]:
    """Background and ADR event times of one cohort, before censoring is added."""
    rng = np.random.default_rng(seed)
    T = float(s.censor_time)
    n_br = int(rng.binomial(s.n, s.background_rate))
    t_br = rng.uniform(1.0, T, size=n_br)

    n_adr = int(rng.binomial(s.n, s.background_rate * s.adr_rate)) if s.has_adr else 0
    if n_br + n_adr > s.n:
        warnings.warn(f"{n_br + n_adr} events exceed n={s.n}; ADR events truncated", RuntimeWarning)
        n_adr = s.n - n_br
    t_adr = np.empty(0)
    if n_adr:
        sd = s.rel_sd * T
        t_adr = rng.normal(s.expected_time, sd, size=n_adr)
        bad = (t_adr <= 0) | (t_adr > T)
        while bad.any():
            t_adr[bad] = rng.normal(s.expected_time, sd, size=int(bad.sum()))
            bad = (t_adr <= 0) | (t_adr > T)
    return t_br, t_adr


def generate_sample(s: ScenarioSpec, seed) -> TteDataset:
    """Simulate one cohort; identical ``(s, seed)`` give identical datasets."""
    t_br, t_adr = simulate_components(s, seed)
    n_events = t_br.size + t_adr.size
    n_cens = s.n - n_events
    times = np.concatenate([t_br, t_adr, np.full(n_cens, float(s.censor_time))])
    events = np.concatenate([np.ones(n_events, dtype=np.int8), np.zeros(n_cens, dtype=np.int8)])
    return TteDataset(times, events, float(s.censor_time))


def pair_seed(master_seed: int, setting_index: int, rep: int, stream: int = 0) -> int:
    """Per-(setting, repetition) seed derived from the master seed.

    ``stream`` separates independent uses of the same pair (0 = data, 1 = MCMC).
    """
    entropy = [int(master_seed), int(setting_index), int(rep), int(stream)]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Setting:
    """One simulation setting: a scenario analysed under a belief and prior family."""

    index: int
    scenario: ScenarioSpec
    belief: str
    family: str

    @property
    def truth(self) -> bool:
        return self.scenario.has_adr

    @property
    def true_quarter(self) -> int:
        return quarter_index(self.scenario.expected_time, self.scenario.censor_time)

    def to_dict(self) -> dict:
        return {"index": self.index, "scenario": self.scenario.to_dict(), "belief": self.belief, "family": self.family}

    @classmethod
    def from_dict(cls, d: dict) -> "Setting":
        return cls(int(d["index"]), ScenarioSpec(**d["scenario"]), d["belief"], d["family"])


@dataclass(frozen=True)
class GridConfig:
    """Levels of the scenario grid; defaults are those of the tuning study."""

    n: tuple = (500, 3000, 5000)
    adr_rate: tuple = (0.5, 1.0)
    expected_time: tuple = (91.0, 183.0, 274.0)
    beliefs: tuple = ("none", "q1", "q2", "q3")
    families: tuple = tuple(FAMILIES)
    censor_time: float = 365.0
    background_rate: float = 0.1
    rel_sd: float = 0.05
    repetitions: int = 100
    include_controls: bool = True

    def __post_init__(self):
        for name in ("n", "adr_rate", "expected_time", "beliefs", "families"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"grid level list {name!r} is empty")
        if any(a <= 0 for a in self.adr_rate):
            raise ValueError("adr_rate levels must be positive; controls are added automatically")
        unknown = set(self.families) - set(FAMILIES)
        if unknown:
            raise ValueError(f"unknown prior families {sorted(unknown)}")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "GridConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass(frozen=True)
class ScenarioGrid:
    settings: tuple = field(default_factory=tuple)
    repetitions: int = 100

    def __len__(self):
        return len(self.settings)

    @property
    def n_adr(self) -> int:
        return sum(s.truth for s in self.settings)

    @property
    def n_control(self) -> int:
        return len(self.settings) - self.n_adr


def build_grid(config: GridConfig = GridConfig()) -> ScenarioGrid:
    """Cartesian product of scenarios, belief presets and prior families.

    ADR settings come first, then (unless ``include_controls`` is false) the
    controls (``adr_rate = 0``) for every sample size, belief and family.
    """
    common = dict(censor_time=config.censor_time, background_rate=config.background_rate, rel_sd=config.rel_sd)
    scenarios = [
        ScenarioSpec(n=n, adr_rate=a, expected_time=e, **common)
        for n, a, e in itertools.product(config.n, config.adr_rate, config.expected_time)
    ]
    if config.include_controls:
        scenarios += [ScenarioSpec(n=n, adr_rate=0.0, **common) for n in config.n]
    settings = []
    for scen, belief, family in itertools.product(scenarios, config.beliefs, config.families):
        settings.append(Setting(len(settings), scen, belief, family))
    return ScenarioGrid(tuple(settings), config.repetitions)
