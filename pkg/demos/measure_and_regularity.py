"""
The conformal measure as atoms on the backward tree
===================================================

Atoms at the depth-p preimages of a base point, weighted by the derivative
norm to the power -delta.  Ball masses should scale like r^delta, and
integrating the transfer operator against the measure should change
nothing.
"""

import math

import numpy as np

from semigroup_dim.config import load_config
from semigroup_dim.julia import julia_cloud
from semigroup_dim.measure import box_dimension, conformal_measure, regularity_audit
from semigroup_dim.thermo import transfer_apply

cfg = load_config("gasket")
gs = cfg.system()
delta = math.log(3) / math.log(2)

mu = conformal_measure(gs, delta, p_min=cfg.measure_depths[0], p_max=cfg.measure_depths[1])
print(f"{len(mu)} atoms, total weight {mu.weights.sum():.15f}")

rep = regularity_audit(mu, delta)
lo, hi = rep.ratio_range
print(f"log-log slope of ball masses {rep.slope:.3f} (delta {delta:.3f})")
print(f"mass / r^delta stays within [{lo:.3f}, {hi:.3f}]")

# stationarity against a few bumps
rng = np.random.default_rng(0)
for _ in range(4):
    c0 = mu.points[rng.integers(len(mu))]
    psi = lambda z: np.exp(-np.abs(z - c0) ** 2 / 0.02)
    a = mu.integrate(psi)
    b = mu.integrate(lambda z: transfer_apply(gs, delta, psi, z))
    print(f"bump at {c0:.3f}:  int psi = {a:.5f}   int N psi = {b:.5f}")

# box counting on an independent random-walk cloud
bc = box_dimension(julia_cloud(gs, count=100_000))
print(f"box-counting slope {bc.slope:.3f} over radii {bc.radii[0]:.3g} .. {bc.radii[-1]:.3g}")
