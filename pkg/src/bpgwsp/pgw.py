"""Power generalized Weibull (PgW) distribution.

Survival, hazard, density, quantile and sampling for the three-parameter
PgW family, plus the right-censored log-likelihood used by the posterior
sampler.  Survival and hazard are evaluated in log space so that large
scales and shapes (e.g. theta=700, nu=14) do not overflow intermediates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PgwDomainError",
    "PgwParams",
    "TteDataset",
    "survival",
    "log_survival",
    "hazard",
    "log_hazard",
    "density",
    "quantile",
    "sample_pgw",
    "log_likelihood",
    "classify_hazard_shape",
    "HAZARD_SHAPES",
]

HAZARD_SHAPES = ("constant", "increasing", "decreasing", "unimodal", "bathtub")


class PgwDomainError(ArithmeticError):
    """Raised when a PgW quantity is not finite for the given parameters."""


@dataclass(frozen=True)
class PgwParams:
    """Scale ``theta`` (time units) and shapes ``nu``, ``gamma``."""

    theta: float
    nu: float
    gamma: float

    def __post_init__(self):
        for name in ("theta", "nu", "gamma"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"PgW parameter {name} must be positive and finite, got {value!r}")
            object.__setattr__(self, name, value)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.theta, self.nu, self.gamma)

    @property
    def is_exponential(self) -> bool:
        return self.nu == 1.0 and self.gamma == 1.0


@dataclass(frozen=True)
class TteDataset:
    """Right-censored time-to-event sample.

    ``times`` are days since prescription, ``events`` are 1 for an observed
    adverse event and 0 for a censored record, ``censor_time`` is the end of
    the observation period.
    """

    times: np.ndarray
    events: np.ndarray
    censor_time: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        events = np.asarray(self.events).reshape(-1)
        if times.size == 0:
            raise ValueError("dataset must contain at least one record")
        if times.shape != events.shape:
            raise ValueError(f"times and events differ in length ({times.size} vs {events.size})")
        if not np.all(np.isin(events, (0, 1))):
            raise ValueError("event flags must be 0 or 1")
        censor_time = float(self.censor_time)
        if not math.isfinite(censor_time) or censor_time <= 0:
            raise ValueError(f"censor_time must be positive, got {censor_time!r}")
        if not np.all(np.isfinite(times)) or np.any(times <= 0):
            raise ValueError("all times must be positive and finite")
        if np.any(times > censor_time):
            raise ValueError(f"times exceed censor_time={censor_time}")
        times.setflags(write=False)
        events = events.astype(np.int8)
        events.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "censor_time", censor_time)

    def __len__(self):
        return self.times.size

    @property
    def n_events(self) -> int:
        return int(self.events.sum())

    def concat(self, other: "TteDataset") -> "TteDataset":
        return TteDataset(
            np.concatenate([self.times, other.times]),
            np.concatenate([self.events, other.events]),
            max(self.censor_time, other.censor_time),
        )


def _log_ratio_softplus(t, p: PgwParams):
    """Return ``(log(t/theta), log1p((t/theta)**nu))`` computed stably."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        log_ratio = np.log(t) - math.log(p.theta)
    # log1p(exp(z)) without overflow
    softplus = np.logaddexp(0.0, p.nu * log_ratio)
    return log_ratio, softplus


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def log_survival(t, p: PgwParams):
    """``log S(t) = 1 - [1 + (t/theta)^nu]^(1/gamma)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("survival is defined for t >= 0")
    _, softplus = _log_ratio_softplus(t, p)
    with np.errstate(over="ignore"):
        out = -np.expm1(softplus / p.gamma)
    if not np.all(np.isfinite(out)):
        offender = "gamma" if p.gamma < 1.0 else "nu"
        raise PgwDomainError(
            f"log-survival overflows: [1+(t/theta)^nu]^(1/gamma) is not finite "
            f"(offending parameter {offender}; theta={p.theta}, nu={p.nu}, gamma={p.gamma})"
        )
    return _scalar(out)


def survival(t, p: PgwParams):
    """Survival function ``exp{1 - [1 + (t/theta)^nu]^(1/gamma)}``.

    Accepts a scalar or array of times ``t >= 0``.  Very late times can
    underflow to 0.0; a non-finite log-survival raises :class:`PgwDomainError`.
    """
    return _scalar(np.exp(log_survival(t, p)))


def log_hazard(t, p: PgwParams):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("hazard is evaluated for t > 0 only")
    log_ratio, softplus = _log_ratio_softplus(t, p)
    out = (
        math.log(p.nu) - math.log(p.gamma) - math.log(p.theta)
        + (p.nu - 1.0) * log_ratio
        + (1.0 / p.gamma - 1.0) * softplus
    )
    if not np.all(np.isfinite(out)):
        raise PgwDomainError(f"log-hazard is not finite for theta={p.theta}, nu={p.nu}, gamma={p.gamma}")
    return _scalar(out)


def hazard(t, p: PgwParams):
    """Hazard ``nu/(gamma theta^nu) t^(nu-1) [1 + (t/theta)^nu]^(1/gamma - 1)`` for ``t > 0``."""
    with np.errstate(over="ignore"):
        out = np.exp(log_hazard(t, p))
    if not np.all(np.isfinite(out)):
        raise PgwDomainError(f"hazard overflows for theta={p.theta}, nu={p.nu}, gamma={p.gamma}")
    return _scalar(out)


def density(t, p: PgwParams):
    """Density ``f(t) = S(t) h(t)`` for ``t > 0``."""
    return _scalar(np.asarray(survival(t, p)) * np.asarray(hazard(t, p)))


def quantile(u, p: PgwParams):
    """Time ``t`` with ``S(t) = u``, i.e. ``theta [(1 - ln u)^gamma - 1]^(1/nu)``."""
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0) | ~(u < 1)):
        raise ValueError("quantile requires 0 < u < 1")
    # (1 - ln u)^gamma - 1 via expm1/log1p keeps precision as u -> 1
    inner = np.expm1(p.gamma * np.log1p(-np.log(u)))
    with np.errstate(divide="ignore"):
        out = p.theta * np.exp(np.log(inner) / p.nu)
    return _scalar(out)


def sample_pgw(n: int, p: PgwParams, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` PgW variates by inverse-CDF sampling."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    u = rng.uniform(size=n)
    # uniform() can return exactly 0
    u = np.where(u > 0.0, u, np.nextafter(0.0, 1.0))
    return np.atleast_1d(quantile(u, p))


def log_likelihood(data: TteDataset, p: PgwParams) -> float:
    """Right-censored log-likelihood.

    Censored records contribute ``log S(t_i)`` and events contribute
    ``log f(t_i) = log S(t_i) + log h(t_i)``.
    """
    log_s = np.asarray(log_survival(data.times, p))
    total = float(np.sum(log_s))
    if data.n_events:
        event_times = data.times[data.events == 1]
        total += float(np.sum(log_hazard(event_times, p)))
    if not math.isfinite(total):
        raise PgwDomainError(f"log-likelihood is not finite for {p}")
    return total


def classify_hazard_shape(p: PgwParams, horizon: float, grid_size: int = 1000, dead_band: float = 1e-9) -> str:
    """Label the hazard on ``(0, horizon]`` from the sign pattern of its slope.

    The hazard is sampled on ``grid_size`` equally spaced points; differences
    smaller than ``dead_band`` relative to the local hazard are treated as
    flat.  Returns one of :data:`HAZARD_SHAPES`.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if p.is_exponential:
        return "constant"
    t = horizon * np.arange(1, grid_size + 1) / grid_size
    h = np.exp(np.asarray(log_hazard(t, p)))
    diff = np.diff(h)
    scale = np.maximum(np.abs(h[:-1]), np.abs(h[1:]))
    signs = np.where(np.abs(diff) <= dead_band * scale, 0, np.sign(diff)).astype(int)
    signs = signs[signs != 0]
    if signs.size == 0:
        return "constant"
    # collapse runs
    runs = signs[np.concatenate([[True], signs[1:] != signs[:-1]])]
    if runs.size == 1:
        return "increasing" if runs[0] > 0 else "decreasing"
    if runs[0] > 0 and runs[-1] < 0:
        return "unimodal"
    if runs[0] < 0 and runs[-1] > 0:
        return "bathtub"
    # more than one turning point: fall back on the dominant direction
    return "increasing" if runs.sum() > 0 else "decreasing"
