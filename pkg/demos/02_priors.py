"""
Prior beliefs about the timing of an adverse reaction
=====================================================

A belief ("the reaction comes in the first/second/third quarter of the
observation window") is encoded as prior means for (theta, nu, gamma).
Lognormal or gamma priors are moment-matched to those means and a common sd.
"""

import numpy as np

from bpgwsp.pgw import PgwParams, hazard
from bpgwsp.prior import PriorSpec, builtin_presets, get_preset, lognormal_meta_from_moments, prior_quantile

for preset in builtin_presets():
    print(f"horizon {preset.horizon:6g}  {preset.belief:4}  means {preset.means}")

# where the hazard at the prior means is largest within the year
t = np.linspace(1, 365, 365)
for belief in ("q1", "q2", "q3"):
    means = get_preset(belief, 365).means
    h = hazard(t, PgwParams(*means))
    print(belief, "hazard maximal at day", int(t[np.argmax(h)]))

# moment matching: mean 1, sd 10
mu, sigma = lognormal_meta_from_moments(1.0, 10.0)
print("lognormal mu, sigma:", mu, sigma)

# four families; "fix" pins theta at its prior mean
spec = PriorSpec.from_family("fix-log-log", get_preset("q2").means)
print("free:", spec.free_params, "| theta fixed at", spec.theta.mean)

# the null prior and its 80% central interval, which serves as the ROPE
null = PriorSpec.from_family("log-log-log", (1, 1, 1))
print("80% interval of the null prior for nu:", prior_quantile(null, "nu", 0.1), prior_quantile(null, "nu", 0.9))
