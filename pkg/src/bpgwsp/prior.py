"""Priors on the PgW parameters.

Each of theta, nu and gamma gets an independent univariate prior, either
Lognormal or Gamma with hyperparameters matched to a requested mean and
standard deviation, or (for theta only) a point mass at the prior mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .pgw import PgwParams

__all__ = [
    "FAMILIES",
    "PARAM_NAMES",
    "DEFAULT_PRIOR_SD",
    "PriorEntry",
    "PriorSpec",
    "BeliefPreset",
    "lognormal_meta_from_moments",
    "gamma_meta_from_moments",
    "prior_log_density",
    "prior_quantile",
    "builtin_presets",
    "get_preset",
    "BELIEF_QUARTER",
]

PARAM_NAMES = ("theta", "nu", "gamma")
DEFAULT_PRIOR_SD = 10.0

# abbreviation -> (theta family, shape family)
FAMILIES = {
    "fix-gam-gam": ("fixed", "gamma"),
    "gam-gam-gam": ("gamma", "gamma"),
    "fix-log-log": ("fixed", "lognormal"),
    "log-log-log": ("lognormal", "lognormal"),
}

BELIEF_QUARTER = {"none": 0, "q1": 1, "q2": 2, "q3": 3}

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_moments(mean, sd):
    if not (mean > 0 and math.isfinite(mean)):
        raise ValueError(f"prior mean must be positive, got {mean!r}")
    if not (sd > 0 and math.isfinite(sd)):
        raise ValueError(f"prior sd must be positive, got {sd!r}")


def lognormal_meta_from_moments(mean: float, sd: float, paper_literal: bool = False) -> tuple[float, float]:
    """Lognormal ``(mu, sigma)`` from a target mean and sd.

    By default the standard moment match is used, so the resulting
    Lognormal(mu, sigma) has exactly the requested mean and sd.  With
    ``paper_literal=True`` the location is ``log(mean) - log(sd^2/mean^2 + 1)``
    (no factor 1/2), which shifts the prior mean below the requested value.
    """
    _check_moments(mean, sd)
    log_cv2p1 = math.log1p((sd / mean) ** 2)
    sigma = math.sqrt(log_cv2p1)
    mu = math.log(mean) - (log_cv2p1 if paper_literal else 0.5 * log_cv2p1)
    return mu, sigma


def gamma_meta_from_moments(mean: float, sd: float) -> tuple[float, float]:
    """Gamma ``(shape, rate)`` with the requested mean and sd."""
    _check_moments(mean, sd)
    return mean**2 / sd**2, mean / sd**2


@dataclass(frozen=True)
class PriorEntry:
    family: str
    mean: float
    sd: float = DEFAULT_PRIOR_SD

    def __post_init__(self):
        if self.family not in ("lognormal", "gamma", "fixed"):
            raise ValueError(f"unknown prior family {self.family!r}")
        _check_moments(float(self.mean), float(self.sd))
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "sd", float(self.sd))

    @property
    def fixed(self) -> bool:
        return self.family == "fixed"


@dataclass(frozen=True)
class PriorSpec:
    """Independent priors for theta, nu and gamma."""

    theta: PriorEntry
    nu: PriorEntry
    gamma: PriorEntry
    paper_literal_lognormal: bool = False

    def __post_init__(self):
        # fixed shapes are allowed here only for degenerate checks; from_family
        # and the signal test never produce them
        if self.nu.family != self.gamma.family:
            raise ValueError("nu and gamma must share a prior family")

    @classmethod
    def from_family(cls, family: str, means, sd: float = DEFAULT_PRIOR_SD, paper_literal_lognormal: bool = False):
        """Build a spec from a family abbreviation such as ``"log-log-log"``."""
        try:
            theta_family, shape_family = FAMILIES[family]
        except KeyError:
            raise ValueError(f"unknown prior family {family!r}; expected one of {sorted(FAMILIES)}") from None
        m_theta, m_nu, m_gamma = (float(m) for m in means)
        return cls(
            PriorEntry(theta_family, m_theta, sd),
            PriorEntry(shape_family, m_nu, sd),
            PriorEntry(shape_family, m_gamma, sd),
            paper_literal_lognormal=paper_literal_lognormal,
        )

    def entry(self, which: str) -> PriorEntry:
        if which not in PARAM_NAMES:
            raise ValueError(f"unknown parameter {which!r}")
        return getattr(self, which)

    @property
    def family_name(self) -> str:
        for name, (theta_family, shape_family) in FAMILIES.items():
            if (theta_family, shape_family) == (self.theta.family, self.nu.family):
                return name
        return f"{self.theta.family}-{self.nu.family}-{self.gamma.family}"

    @property
    def means(self) -> tuple[float, float, float]:
        return (self.theta.mean, self.nu.mean, self.gamma.mean)

    @property
    def free_params(self) -> tuple[str, ...]:
        return tuple(n for n in PARAM_NAMES if not self.entry(n).fixed)

    def meta(self, which: str) -> tuple[float, float]:
        """Hyperparameters ``(mu, sigma)`` or ``(shape, rate)`` for one entry."""
        e = self.entry(which)
        if e.family == "lognormal":
            return lognormal_meta_from_moments(e.mean, e.sd, self.paper_literal_lognormal)
        if e.family == "gamma":
            return gamma_meta_from_moments(e.mean, e.sd)
        raise ValueError(f"{which} is fixed and has no hyperparameters")

    def null(self, sd: float | None = None) -> "PriorSpec":
        """The same families centred on the constant-hazard null, means (1, 1, 1)."""
        sd_theta = self.theta.sd if sd is None else sd
        sd_shape = self.nu.sd if sd is None else sd
        return PriorSpec(
            PriorEntry(self.theta.family, 1.0, sd_theta),
            PriorEntry(self.nu.family, 1.0, sd_shape),
            PriorEntry(self.gamma.family, 1.0, sd_shape),
            paper_literal_lognormal=self.paper_literal_lognormal,
        )

    def to_dict(self) -> dict:
        return {
            name: {"family": e.family, "mean": e.mean, "sd": e.sd}
            for name, e in zip(PARAM_NAMES, (self.theta, self.nu, self.gamma))
        } | {"paper_literal_lognormal": self.paper_literal_lognormal}

    @classmethod
    def from_dict(cls, d: dict) -> "PriorSpec":
        return cls(
            *(PriorEntry(**d[name]) for name in PARAM_NAMES),
            paper_literal_lognormal=bool(d.get("paper_literal_lognormal", False)),
        )


def _entry_logpdf(spec: PriorSpec, which: str, x):
    e = spec.entry(which)
    a, b = spec.meta(which)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_x = np.log(x)
        if e.family == "lognormal":
            return -log_x - math.log(b) - _LOG_SQRT_2PI - (log_x - a) ** 2 / (2.0 * b * b)
        return a * math.log(b) - special.gammaln(a) + (a - 1.0) * log_x - b * np.asarray(x)


def prior_log_density(spec: PriorSpec, p: PgwParams) -> float:
    """Sum of the univariate prior log-densities over the non-fixed parameters."""
    total = 0.0
    for name, value in zip(PARAM_NAMES, p.as_tuple()):
        e = spec.entry(name)
        if e.fixed:
            if value != e.mean:
                raise ValueError(f"{name} is fixed at {e.mean} but got {value}")
            continue
        total += float(_entry_logpdf(spec, name, value))
    return total


def prior_quantile(spec: PriorSpec, which: str, prob: float) -> float:
    """Quantile of the prior of ``which`` at probability ``prob``."""
    e = spec.entry(which)
    if e.fixed:
        raise ValueError(f"{which} has a fixed prior; quantiles are undefined")
    if not 0.0 < prob < 1.0:
        raise ValueError(f"prob must lie in (0, 1), got {prob!r}")
    a, b = spec.meta(which)
    if e.family == "lognormal":
        return math.exp(a + float(special.ndtri(prob)) * b)
    return float(special.gammaincinv(a, prob)) / b


@dataclass(frozen=True)
class BeliefPreset:
    """Prior-mean triple encoding a belief about when an ADR occurs."""

    belief: str
    horizon: float
    means: tuple[float, float, float]
    expected_time: float | None = field(default=None)

    @property
    def quarter(self) -> int:
        return BELIEF_QUARTER[self.belief]


_PRESET_TABLE = {
    365.0: {
        "q1": (91.0, (1.0, 0.207, 1.0)),
        "q2": (183.0, (20.0, 5.5, 14.0)),
        "q3": (274.0, (300.0, 4.0, 1.0)),
    },
    21.0: {
        "q1": (5.25, (2.5, 0.5, 1.0)),
        "q2": (10.5, (3.0, 3.0, 5.0)),
        "q3": (15.75, (18.0, 5.0, 1.0)),
    },
    1095.0: {
        "q1": (274.0, (200.0, 0.63, 1.0)),
        "q2": (548.0, (30.0, 3.2, 10.0)),
        "q3": (821.0, (700.0, 14.0, 4.0)),
    },
}


def builtin_presets() -> list[BeliefPreset]:
    """All shipped belief presets, for horizons of 21, 365 and 1095 days."""
    out = []
    for horizon, rows in _PRESET_TABLE.items():
        out.append(BeliefPreset("none", horizon, (1.0, 1.0, 1.0)))
        for belief, (expected, means) in rows.items():
            out.append(BeliefPreset(belief, horizon, means, expected))
    return out


def get_preset(belief: str, horizon: float = 365.0) -> BeliefPreset:
    if belief not in BELIEF_QUARTER:
        raise ValueError(f"unknown belief {belief!r}; expected none, q1, q2 or q3")
    if belief == "none":
        return BeliefPreset("none", float(horizon), (1.0, 1.0, 1.0))
    horizon = float(horizon)
    if horizon not in _PRESET_TABLE:
        raise ValueError(
            f"no shipped preset for horizon {horizon:g}; available: "
            f"{', '.join(f'{h:g}' for h in _PRESET_TABLE)} (or supply custom means)"
        )
    expected, means = _PRESET_TABLE[horizon][belief]
    return BeliefPreset(belief, horizon, means, expected)
