"""
The power generalized Weibull distribution
==========================================

Three parameters: a scale theta and two shapes nu and gamma. With
nu = gamma = 1 it is the exponential distribution; other shape pairs give
increasing, decreasing, unimodal or bathtub hazards.
"""

import numpy as np

from bpgwsp.pgw import PgwParams, classify_hazard_shape, hazard, quantile, sample_pgw, survival

# exponential special case: S(t) = exp(-t / theta)
exp2 = PgwParams(theta=2.0, nu=1.0, gamma=1.0)
print("S(1) =", survival(1.0, exp2), "vs", np.exp(-0.5))
print("h(t) constant:", hazard(np.array([0.5, 1.0, 5.0]), exp2))

# one shape pair per hazard pattern, over a one-year horizon
for p in [PgwParams(100, 1, 1), PgwParams(100, 3, 1), PgwParams(100, 0.5, 1),
          PgwParams(100, 3, 8), PgwParams(100, 0.5, 0.2)]:
    print(f"{p}: {classify_hazard_shape(p, 365.0)}")

# quantile and survival are inverses
p = PgwParams(20, 5.5, 14)
u = np.array([0.1, 0.5, 0.9])
t = quantile(u, p)
print("quantiles:", t, "survival back:", survival(t, p))

# inverse-transform sampling: the empirical median sits near quantile(0.5)
x = sample_pgw(100_000, p, np.random.default_rng(0))
print("median", np.median(x), "vs", quantile(0.5, p))
