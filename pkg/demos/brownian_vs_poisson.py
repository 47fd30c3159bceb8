# %% [markdown]
# Decay rates of first-order moments: Brownian motion vs a Poisson process.
#
# Both have second-moment intensity 1 (Poisson rate 0.01 with charge 10), so
# their p=2 moments decay like s.  At p=1 Brownian moments decay like s^(1/2)
# while Poisson moments decay like s: the moment at p=1 tells them apart.

# %%
import numpy as np

from scatmoments import filters
from scatmoments._rng import derive_rng
from scatmoments.fitting import fit_loglog
from scatmoments.pointprocess import ChargeDistribution, IntensityModel, attach_charges, simulate_inhomogeneous
from scatmoments.scattering import first_order_invariant, first_order_invariant_path
from scatmoments.selfsimilar import FBM

seed = 1729
ladder = [2.0**-k for k in range(2, 9)]
xi = filters.sample_frequency(derive_rng(seed, "demo-xi"))
rng = derive_rng(seed, "demo-poisson")
pattern = attach_charges(simulate_inhomogeneous(IntensityModel.constant(0.01, 1e6), rng), ChargeDistribution.constant(10.0), rng)

# %%
for p in (1, 2):
    bm = [first_order_invariant_path(filters.GaborFilter(s, xi), p, FBM(0.5), 2000, seed + i).value for i, s in enumerate(ladder)]
    po = [first_order_invariant(filters.GaborFilter(s, xi), p, pattern).value for s in ladder]
    print(f"p={p}: brownian slope {fit_loglog(ladder, bm).slope:.3f}, poisson slope {fit_loglog(ladder, po).slope:.3f}")
