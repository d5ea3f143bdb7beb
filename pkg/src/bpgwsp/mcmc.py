"""Posterior sampling for the PgW model.

The sampler is an adaptive random-walk Metropolis algorithm on the log of
the free parameters.  During burn-in each chain learns a proposal
covariance from its own history and tunes a global step scale towards the
target acceptance rate (Robbins-Monro); both are frozen once burn-in ends,
so the retained draws come from a fixed Markov kernel.

Chains are independent: each owns a random stream derived from
``(seed, chain_index)``.  For speed they are advanced together in
vectorised form, which gives bitwise the same draws as running each chain
on its own.
"""
from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .pgw import PgwDomainError, PgwParams, TteDataset, log_likelihood
from .prior import PARAM_NAMES, PriorSpec, prior_log_density

__all__ = [
    "McmcSettings",
    "PosteriorDraws",
    "McmcInitError",
    "log_posterior",
    "run_chain",
    "run_chains",
    "effective_sample_size",
    "split_rhat",
    "diagnose",
]

ESS_TARGET = 10_000


class McmcInitError(RuntimeError):
    """No finite starting point could be found for a chain."""


@dataclass(frozen=True)
class McmcSettings:
    chains: int = 4
    iters_per_chain: int = 10_000
    burn_in: int = 1_000
    seed: int = 20240101
    target_accept: float = 0.234
    init_jitter_sd: float = 0.1

    def __post_init__(self):
        if self.chains < 2:
            raise ValueError("at least 2 chains are required for split-Rhat")
        if self.iters_per_chain < 100:
            raise ValueError("iters_per_chain must be >= 100")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")
        if not self.init_jitter_sd > 0:
            raise ValueError("init_jitter_sd must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def total_draws(self) -> int:
        return self.chains * self.iters_per_chain

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PosteriorDraws:
    """Pooled post-burn-in draws, chain after chain, one column per free parameter."""

    draws: np.ndarray
    names: tuple
    chains: int
    ess: np.ndarray
    rhat: np.ndarray
    accept_rate: np.ndarray
    wall_time: float
    settings: McmcSettings | None = None
    fixed: dict = field(default_factory=dict)
    degenerate: tuple = ()

    @property
    def iters_per_chain(self) -> int:
        return self.draws.shape[0] // self.chains

    def column(self, name: str) -> np.ndarray:
        if name in self.fixed:
            return np.full(self.draws.shape[0], self.fixed[name])
        return self.draws[:, self.names.index(name)]

    def ess_of(self, name: str) -> float:
        return float(self.ess[self.names.index(name)])

    def rhat_of(self, name: str) -> float:
        return float(self.rhat[self.names.index(name)])

    def diagnostics(self) -> dict:
        """Deterministic diagnostics; wall time is reported separately."""
        return {
            "ess": {n: float(e) for n, e in zip(self.names, self.ess)},
            "rhat": {n: float(r) for n, r in zip(self.names, self.rhat)},
            "accept_rate": [float(a) for a in self.accept_rate],
            "degenerate": list(self.degenerate),
            "fixed": dict(self.fixed),
            "rows": int(self.draws.shape[0]),
            "chains": int(self.chains),
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.names)
            for row in self.draws:
                writer.writerow([repr(float(x)) for x in row])

    def sidecar(self) -> dict:
        out = self.diagnostics()
        if self.settings is not None:
            out["settings"] = self.settings.to_dict()
            out["seed"] = self.settings.seed
        return out


def log_posterior(data: TteDataset | None, spec: PriorSpec, p) -> float:
    """Unnormalised log posterior; ``-inf`` wherever a factor is undefined.

    ``p`` is a :class:`PgwParams` or a plain ``(theta, nu, gamma)`` triple; a
    triple with a non-positive coordinate lies outside the support.  With
    ``data=None`` the likelihood is flat and only the prior remains.
    """
    if not isinstance(p, PgwParams):
        values = tuple(float(v) for v in p)
        if not all(v > 0 and math.isfinite(v) for v in values):
            return -math.inf
        p = PgwParams(*values)
    try:
        lp = prior_log_density(spec, p)
        return lp if data is None else lp + log_likelihood(data, p)
    except PgwDomainError:
        return -math.inf


class _LogTarget:
    """Vectorised log posterior over log-parameters, Jacobian included.

    ``phi`` has shape ``(chains, 3)`` holding ``log(theta), log(nu), log(gamma)``;
    fixed coordinates are carried at their fixed value.
    """

    def __init__(self, data: TteDataset | None, spec: PriorSpec):
        self.flat = data is None
        self.priors = []
        for j, name in enumerate(PARAM_NAMES):
            e = spec.entry(name)
            if not e.fixed:
                self.priors.append((j, e.family, *spec.meta(name)))
        if self.flat:
            return
        times, inverse = np.unique(data.times, return_inverse=True)
        self.log_t = np.log(times)
        self.n_at = np.bincount(inverse, minlength=times.size).astype(float)
        self.n_ev = np.bincount(inverse, weights=data.events.astype(float), minlength=times.size)
        has_events = self.n_ev > 0
        self.ev_log_t = self.log_t[has_events]
        self.ev_count = self.n_ev[has_events]
        self.ev_log_t_sum = float(self.ev_log_t @ self.ev_count)
        self.n_events = float(self.ev_count.sum())

    def __call__(self, phi: np.ndarray) -> np.ndarray:
        lp = self._log_prior(phi)
        if self.flat:
            return np.where(np.isfinite(lp), lp, -np.inf)
        log_theta = phi[:, 0:1]
        log_nu = phi[:, 1:2]
        log_gamma = phi[:, 2:3]
        nu = np.exp(log_nu)
        inv_gamma = np.exp(-log_gamma)
        with np.errstate(over="ignore", invalid="ignore"):
            log_ratio = self.log_t[None, :] - log_theta
            softplus = np.logaddexp(0.0, nu * log_ratio)
            log_s = -np.expm1(softplus * inv_gamma)
            ll = (log_s * self.n_at).sum(axis=1)
            # sum over events of log h, with the t-only terms pre-summed
            ev_ratio = self.ev_log_t[None, :] - log_theta
            ev_softplus = np.logaddexp(0.0, nu * ev_ratio)
            ll = ll + ((inv_gamma - 1.0) * ev_softplus * self.ev_count).sum(axis=1)
            ll = ll + self.n_events * (log_nu - log_gamma - nu * log_theta)[:, 0]
            ll = ll + (nu[:, 0] - 1.0) * self.ev_log_t_sum
            out = ll + lp
        return np.where(np.isfinite(out), out, -np.inf)

    def _log_prior(self, phi: np.ndarray) -> np.ndarray:
        lp = np.zeros(phi.shape[0])
        with np.errstate(over="ignore", invalid="ignore"):
            for j, family, a, b in self.priors:
                x = phi[:, j]
                # densities of log(parameter): lognormal -> normal, gamma -> log-gamma
                if family == "lognormal":
                    lp = lp - (x - a) ** 2 / (2.0 * b * b) - math.log(b) - 0.5 * math.log(2.0 * math.pi)
                else:
                    lp = lp + a * math.log(b) - special.gammaln(a) + a * x - b * np.exp(x)
        return lp


def _chain_rng(seed: int, chain_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(chain_index)]))


def _initial_point(target, means_log, free, rng, jitter_sd, chain_index):
    for _ in range(100):
        phi = means_log.copy()
        phi[free] += jitter_sd * rng.standard_normal(len(free))
        if np.isfinite(target(phi[None, :])[0]):
            return phi
    raise McmcInitError(f"chain {chain_index}: no finite log-posterior after 100 jittered starts")


def _sample(data, spec, settings: McmcSettings, chain_indices):
    """Advance the given chains together; returns draws (chains, iters, n_free) and acceptance."""
    target = _LogTarget(data, spec)
    free = [j for j, name in enumerate(PARAM_NAMES) if not spec.entry(name).fixed]
    d = len(free)
    n_chains = len(chain_indices)
    total = settings.burn_in + settings.iters_per_chain
    means_log = np.log(np.array(spec.means, dtype=float))

    phi = np.empty((n_chains, 3))
    z = np.empty((n_chains, total, d))
    log_u = np.empty((n_chains, total))
    for c, ci in enumerate(chain_indices):
        rng = _chain_rng(settings.seed, ci)
        phi[c] = _initial_point(target, means_log, free, rng, settings.init_jitter_sd, ci)
        z[c] = rng.standard_normal((total, d))
        log_u[c] = np.log(rng.uniform(size=total))

    out = np.empty((n_chains, settings.iters_per_chain, d))
    accepted = np.zeros(n_chains)
    if d == 0:
        out[:] = np.exp(phi[:, free])[:, None, :]
        return out, np.ones(n_chains)

    lp = target(phi)
    chol = np.tile(np.eye(d) * 0.1, (n_chains, 1, 1))
    log_scale = np.zeros(n_chains)
    burn = settings.burn_in
    history = np.empty((n_chains, burn, d)) if burn else None
    cov_scale = 2.38 / math.sqrt(d)
    for it in range(total):
        step = np.einsum("cij,cj->ci", chol, z[:, it, :]) * np.exp(log_scale)[:, None]
        prop = phi.copy()
        prop[:, free] += step
        lp_prop = target(prop)
        accept = log_u[:, it] < lp_prop - lp
        phi[accept] = prop[accept]
        lp[accept] = lp_prop[accept]
        if it < burn:
            log_scale += (accept - settings.target_accept) * 2.0 / (it + 1) ** 0.6
            history[:, it, :] = phi[:, free]
            if it >= 199 and (it + 1) % 100 == 0:
                recent = history[:, (it + 1) // 2 : it + 1, :]
                for c in range(n_chains):
                    cov = np.atleast_2d(np.cov(recent[c].T)) + 1e-10 * np.eye(d)
                    try:
                        chol[c] = np.linalg.cholesky(cov) * cov_scale
                    except np.linalg.LinAlgError:
                        pass
        else:
            accepted += accept
            out[:, it - burn, :] = np.exp(phi[:, free])
    return out, accepted / settings.iters_per_chain


def run_chain(data: TteDataset, spec: PriorSpec, settings: McmcSettings, chain_index: int) -> list[PgwParams]:
    """Post-burn-in draws of a single chain as parameter triples."""
    draws, _ = _sample(data, spec, settings, [chain_index])
    free = spec.free_params
    out = []
    for row in draws[0]:
        values = dict(zip(PARAM_NAMES, spec.means))
        values.update(zip(free, row))
        out.append(PgwParams(**values))
    return out


def run_chains(data: TteDataset | None, spec: PriorSpec, settings: McmcSettings = McmcSettings()) -> PosteriorDraws:
    """Run all chains, drop burn-in, pool draws and compute ESS and split-Rhat.

    ``data=None`` gives a flat likelihood, so the chains sample the prior.
    """
    start = time.perf_counter()
    draws, accept = _sample(data, spec, settings, list(range(settings.chains)))
    wall = time.perf_counter() - start
    free = spec.free_params
    pooled = draws.reshape(settings.chains * settings.iters_per_chain, len(free))
    fixed = {n: spec.entry(n).mean for n in PARAM_NAMES if n not in free}
    ess, rhat, degenerate = diagnose(pooled, settings.chains, free)
    result = PosteriorDraws(pooled, free, settings.chains, ess, rhat, accept, wall, settings, fixed, degenerate)
    bad = [n for n, r in zip(free, rhat) if r > 1.1]
    if bad:
        warnings.warn(f"split-Rhat > 1.1 for {', '.join(bad)}; chains may not have converged", RuntimeWarning)
    return result


def diagnose(pooled: np.ndarray, n_chains: int, names=None):
    ess, rhat, degenerate = [], [], []
    for j in range(pooled.shape[1]):
        col = pooled[:, j]
        if np.ptp(col) == 0:
            degenerate.append(names[j] if names else j)
        ess.append(effective_sample_size(col, n_chains))
        rhat.append(split_rhat(col, n_chains))
    return np.array(ess), np.array(rhat), tuple(degenerate)


def _as_chains(column, n_chains: int) -> np.ndarray:
    x = np.asarray(column, dtype=float)
    if x.ndim == 2:
        return x
    if n_chains < 2:
        raise ValueError("at least 2 chains are required")
    if x.size % n_chains:
        raise ValueError(f"{x.size} draws do not split evenly into {n_chains} chains")
    return x.reshape(n_chains, -1)


def _autocov(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of each row, via FFT."""
    n = x.shape[-1]
    centred = x - x.mean(axis=-1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centred, size)
    return np.fft.irfft(f * np.conjugate(f), size)[..., :n] / n


def effective_sample_size(column, n_chains: int) -> float:
    """Multi-chain ESS with Geyer's initial monotone sequence truncation.

    ``column`` is either the pooled draws (chain after chain, equal
    lengths) or an array of shape ``(n_chains, n)``.  A constant column has
    ESS equal to the number of draws.  The result is capped at the number
    of draws.
    """
    x = _as_chains(column, n_chains)
    m, n = x.shape
    if m < 2:
        raise ValueError("at least 2 chains are required")
    total = m * n
    acov = _autocov(x)
    chain_var = acov[:, 0] * n / (n - 1.0)
    w = chain_var.mean()
    var_plus = w * (n - 1.0) / n + x.mean(axis=1).var(ddof=1)
    if not var_plus > 0:
        return float(total)
    rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    tau = -1.0
    prev = math.inf
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair < 0:
            break
        pair = min(pair, prev)
        tau += 2.0 * pair
        prev = pair
    return float(min(total / tau, total))


def split_rhat(column, n_chains: int) -> float:
    """Split-Rhat: each chain is halved and the halves compared.

    An odd trailing draw is dropped.  Zero within-chain variance returns 1.0.
    """
    x = _as_chains(column, n_chains)
    m, n = x.shape
    if m < 2:
        raise ValueError("at least 2 chains are required")
    half = n // 2
    if half < 2:
        raise ValueError("too few draws per chain")
    halves = np.concatenate([x[:, :half], x[:, half : 2 * half]], axis=0)
    within = halves.var(axis=1, ddof=1).mean()
    if not within > 0:
        return 1.0
    between_over_n = halves.mean(axis=1).var(ddof=1)
    var_plus = within * (half - 1.0) / half + between_over_n
    return float(max(1.0, math.sqrt(var_plus / within)))
