"""
Pressure curves and Bowen's formula
===================================

Two systems whose dimension is known in closed form: the squaring map,
with the unit circle as Julia set, and three doubling maps whose Julia set
is a Sierpinski gasket.
"""

import math

import numpy as np

from semigroup_dim.config import load_config
from semigroup_dim.thermo import bowen_dimension, pressure_curve

t = np.linspace(0, 3, 7)

# z^2: every preimage chain contracts by exactly 1/2, so P(t) = (1 - t) log 2
z2 = load_config("z2").system()
curve = pressure_curve(z2, t)
for ti, p in zip(curve.t, curve.P):
    print(f"z2      t={ti:.1f}  P={p:+.10f}  exact={(1 - ti) * math.log(2):+.10f}")

# the gasket: three similarities of ratio 1/2, P(t) = log 3 - t log 2
gasket = load_config("gasket").system()
curve = pressure_curve(gasket, t)
for ti, p in zip(curve.t, curve.P):
    print(f"gasket  t={ti:.1f}  P={p:+.10f}  exact={math.log(3) - ti * math.log(2):+.10f}")

# the zero of P is the dimension
for name, exact in (("z2", 1.0), ("gasket", math.log(3) / math.log(2))):
    res = bowen_dimension(load_config(name).system())
    d = res.diagnostics
    print(f"{name:7s} delta={res.delta:.8f} exact={exact:.8f} depth={d['depth']} depth_error={d['depth_error']:.1e}")
