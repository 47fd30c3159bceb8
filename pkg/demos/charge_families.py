# %% [markdown]
# Small-scale first-order moments of compound Poisson processes.
#
# Three processes share the intensity 0.01 but carry different charges.
# At p=1 the normalized moments S/(s ||w||_1) all approach the intensity
# times E|A| = 1, so they are indistinguishable.  At p=2 the Gaussian family
# separates because E|A|^2 = pi/2.

# %%
import math

import numpy as np

from scatmoments import filters
from scatmoments._rng import derive_rng
from scatmoments.pointprocess import ChargeDistribution, IntensityModel, attach_charges, simulate_inhomogeneous
from scatmoments.scattering import first_order_invariant
from scatmoments.theory import predict_first_order

seed = 1729
lam = IntensityModel.constant(0.01, 2e5)
families = {
    "ordinary": ChargeDistribution.constant(1.0),
    "gaussian": ChargeDistribution.gaussian(math.pi / 2),
    "rademacher": ChargeDistribution.rademacher(),
}
xi = filters.sample_frequency(derive_rng(seed, "demo-xi"))
ladder = filters.scale_ladder(16.0, range(0, 10, 3))

# %%
patterns = {}
for name, dist in families.items():
    rng = derive_rng(seed, "demo", name)
    patterns[name] = attach_charges(simulate_inhomogeneous(lam, rng), dist, rng)

# %%
for p in (1, 2):
    norm = filters.window_pnorm(p=p)
    print(f"p={p}   " + "  ".join(f"{n:>12s}" for n in families))
    for s in ladder:
        f = filters.GaborFilter(s, xi)
        vals = [first_order_invariant(f, p, patterns[n]).value / (s * norm) for n in families]
        print(f"s={s:8.4f} " + "  ".join(f"{v:12.5f}" for v in vals))
    limits = [predict_first_order(0.01, p, d).value / norm for d in families.values()]
    print("limit      " + "  ".join(f"{v:12.5f}" for v in limits) + "\n")
