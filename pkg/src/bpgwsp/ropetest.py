"""HDI+ROPE decision layer.

For each shape parameter a region of practical equivalence (ROPE) around
the constant-hazard value is built from the null prior, and a credibility
interval (equal-tailed or highest-density) from the posterior draws.  The
two per-parameter outcomes are combined into a signal by one of three
rules.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .mcmc import ESS_TARGET, McmcSettings, PosteriorDraws, run_chains
from .pgw import TteDataset
from .prior import PriorSpec, prior_quantile

__all__ = [
    "Interval",
    "InterimOutcome",
    "TestConfig",
    "TestDecision",
    "RULES",
    "LEVEL_GRID",
    "rope_interval",
    "eti",
    "hdi",
    "credible_interval",
    "single_outcome",
    "combine",
    "decide",
    "run_test",
]

RULES = ("option1", "option2", "option3")
LEVEL_GRID = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))
MIN_SAMPLES = 100


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval bounds out of order: [{self.lo}, {self.hi}]")

    def as_list(self) -> list[float]:
        return [float(self.lo), float(self.hi)]

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi


class InterimOutcome(str, enum.Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    UNDECIDED = "undecided"


def _normalise_rule(rule) -> str:
    if isinstance(rule, int) or (isinstance(rule, str) and rule.isdigit()):
        rule = f"option{int(rule)}"
    if rule not in RULES:
        raise ValueError(f"unknown combination rule {rule!r}")
    return rule


@dataclass(frozen=True)
class TestConfig:
    """ROPE and credibility-interval levels (as coverage), CI type and combination rule."""

    __test__ = False  # not a pytest class

    rope_level: float = 0.80
    ci_level: float = 0.80
    ci_type: str = "hdi"
    combination_rule: str = "option2"
    null_sd: float = 10.0

    def __post_init__(self):
        for name in ("rope_level", "ci_level"):
            level = getattr(self, name)
            if not 0.0 < level < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {level!r}")
        if self.ci_type not in ("eti", "hdi"):
            raise ValueError(f"ci_type must be 'eti' or 'hdi', got {self.ci_type!r}")
        object.__setattr__(self, "combination_rule", _normalise_rule(self.combination_rule))
        if not self.null_sd > 0:
            raise ValueError("null_sd must be positive")

    @property
    def recommended(self) -> bool:
        return (
            math.isclose(self.rope_level, 0.80)
            and math.isclose(self.ci_level, 0.80)
            and self.ci_type == "hdi"
            and self.combination_rule == "option2"
        )

    @property
    def key(self) -> str:
        return f"{self.rope_level:.2f}|{self.ci_level:.2f}|{self.ci_type}|{self.combination_rule[-1]}"

    @classmethod
    def from_key(cls, key: str) -> "TestConfig":
        rope, ci, ci_type, rule = key.split("|")
        return cls(float(rope), float(ci), ci_type, rule)

    def to_dict(self) -> dict:
        return asdict(self) | {"recommended": self.recommended}


@dataclass
class TestDecision:
    __test__ = False

    outcome_nu: InterimOutcome
    outcome_gamma: InterimOutcome
    signal: bool
    rope_nu: Interval
    rope_gamma: Interval
    ci_nu: Interval
    ci_gamma: Interval
    config: TestConfig | None = None
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "signal": bool(self.signal),
            "outcome_nu": self.outcome_nu.value,
            "outcome_gamma": self.outcome_gamma.value,
            "rope_nu": self.rope_nu.as_list(),
            "rope_gamma": self.rope_gamma.as_list(),
            "ci_nu": self.ci_nu.as_list(),
            "ci_gamma": self.ci_gamma.as_list(),
            "config": self.config.to_dict() if self.config else None,
            "diagnostics": self.diagnostics,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestDecision":
        config = d.get("config")
        if config:
            config = TestConfig(**{k: v for k, v in config.items() if k != "recommended"})
        return cls(
            InterimOutcome(d["outcome_nu"]),
            InterimOutcome(d["outcome_gamma"]),
            bool(d["signal"]),
            *(Interval(*d[k]) for k in ("rope_nu", "rope_gamma", "ci_nu", "ci_gamma")),
            config=config,
            diagnostics=d.get("diagnostics", {}),
            warnings=list(d.get("warnings", [])),
        )


def rope_interval(null_spec: PriorSpec, which: str, level: float) -> Interval:
    """Equal-tailed interval of prior mass ``level`` under the null prior of ``which``."""
    entry = null_spec.entry(which)
    if entry.fixed:
        raise ValueError(f"{which} has a fixed prior; no ROPE can be built")
    if entry.mean != 1.0:
        raise ValueError(f"null prior for {which} must have mean 1, got {entry.mean}")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    lo = prior_quantile(null_spec, which, (1.0 - level) / 2.0)
    hi = prior_quantile(null_spec, which, (1.0 + level) / 2.0)
    return Interval(lo, hi)


def _check_samples(samples, level):
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size < MIN_SAMPLES:
        raise ValueError(f"at least {MIN_SAMPLES} samples are required, got {x.size}")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    return x


def eti(samples, level: float) -> Interval:
    """Equal-tailed interval from linearly interpolated empirical quantiles."""
    x = _check_samples(samples, level)
    lo, hi = np.quantile(x, [(1.0 - level) / 2.0, (1.0 + level) / 2.0])
    return Interval(float(lo), float(hi))


def _window(level: float, n: int) -> int:
    # round() absorbs float fuzz such as 0.8 * 100 = 80.00000000000001
    return min(n, max(1, math.ceil(round(level * n, 9))))


def _hdi_sorted(x: np.ndarray, level: float) -> Interval:
    m = _window(level, x.size)
    widths = x[m - 1 :] - x[: x.size - m + 1]
    i = int(np.argmin(widths))  # first minimum, i.e. leftmost window
    return Interval(float(x[i]), float(x[i + m - 1]))


def hdi(samples, level: float) -> Interval:
    """Shortest interval spanning ``ceil(level * n)`` sorted draws; ties go to the leftmost."""
    x = _check_samples(samples, level)
    return _hdi_sorted(np.sort(x), level)


def credible_interval(samples, level: float, ci_type: str) -> Interval:
    if ci_type == "hdi":
        return hdi(samples, level)
    if ci_type == "eti":
        return eti(samples, level)
    raise ValueError(f"unknown ci_type {ci_type!r}")


def single_outcome(ci: Interval, rope: Interval) -> InterimOutcome:
    """Closed-interval comparison: inside the ROPE, disjoint from it, or overlapping."""
    if rope.lo <= ci.lo and ci.hi <= rope.hi:
        return InterimOutcome.ACCEPTED
    if ci.hi < rope.lo or ci.lo > rope.hi:
        return InterimOutcome.REJECTED
    return InterimOutcome.UNDECIDED


_A, _R, _U = InterimOutcome.ACCEPTED, InterimOutcome.REJECTED, InterimOutcome.UNDECIDED

# (outcome for nu, outcome for gamma) -> signal under option 1, 2, 3
COMBINATION_TABLE = {
    (_R, _R): (True, True, True),
    (_A, _R): (True, False, False),
    (_R, _A): (True, False, False),
    (_A, _A): (False, False, False),
    (_U, _R): (True, True, False),
    (_U, _A): (False, False, False),
    (_R, _U): (True, True, False),
    (_A, _U): (False, False, False),
    (_U, _U): (True, False, False),
}


def combine(o_nu: InterimOutcome, o_gamma: InterimOutcome, rule) -> bool:
    """Signal decision for a pair of interim outcomes under a combination rule."""
    rule = _normalise_rule(rule)
    return COMBINATION_TABLE[(InterimOutcome(o_nu), InterimOutcome(o_gamma))][RULES.index(rule)]


def decide(nu_draws, gamma_draws, null_spec: PriorSpec, config: TestConfig) -> TestDecision:
    """Apply the HDI+ROPE test to posterior draws of the two shape parameters."""
    rope_nu = rope_interval(null_spec, "nu", config.rope_level)
    rope_gamma = rope_interval(null_spec, "gamma", config.rope_level)
    ci_nu = credible_interval(nu_draws, config.ci_level, config.ci_type)
    ci_gamma = credible_interval(gamma_draws, config.ci_level, config.ci_type)
    o_nu = single_outcome(ci_nu, rope_nu)
    o_gamma = single_outcome(ci_gamma, rope_gamma)
    return TestDecision(o_nu, o_gamma, combine(o_nu, o_gamma, config.combination_rule),
                        rope_nu, rope_gamma, ci_nu, ci_gamma, config)


def run_test(
    data: TteDataset,
    spec: PriorSpec,
    null_spec: PriorSpec | None = None,
    settings: McmcSettings = McmcSettings(),
    config: TestConfig = TestConfig(),
    posterior: PosteriorDraws | None = None,
) -> TestDecision:
    """Fit the posterior and run the HDI+ROPE test on nu and gamma.

    ``null_spec`` defaults to ``spec.null(config.null_sd)``.  A precomputed
    ``posterior`` may be passed to skip sampling.
    """
    if spec.nu.fixed or spec.gamma.fixed:
        raise ValueError("the shape parameters must have non-fixed priors")
    if null_spec is None:
        null_spec = spec.null(config.null_sd)
    if posterior is None:
        posterior = run_chains(data, spec, settings)
    decision = decide(posterior.column("nu"), posterior.column("gamma"), null_spec, config)
    decision.diagnostics = posterior.diagnostics()
    for name in ("nu", "gamma"):
        ess = posterior.ess_of(name)
        if ess < ESS_TARGET:
            decision.warnings.append(f"effective sample size of {name} is {ess:.0f} < {ESS_TARGET}")
        rhat = posterior.rhat_of(name)
        if rhat > 1.1:
            decision.warnings.append(f"split-Rhat of {name} is {rhat:.3f} > 1.1")
    return decision
