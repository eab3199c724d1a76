"""
A semigroup whose Julia set has interior
========================================

<z^2, z^2/4, z^2/3> fills the closed annulus 1 <= |z| <= 4, yet the zero of
the pressure is larger than 2, the dimension of the sphere.  The preimages
under the first and third maps overlap, and the overlap carries mass for
the conformal measure, so the zero is not a Hausdorff dimension here.
"""

import math

import numpy as np

from semigroup_dim.checks import postcritical_cloud
from semigroup_dim.config import load_config
from semigroup_dim.julia import julia_cloud
from semigroup_dim.measure import conformal_measure, separating_overlap
from semigroup_dim.thermo import bowen_dimension

gs = load_config("annulus").system()

cloud = julia_cloud(gs, count=20000)
r = np.abs(cloud.points)
print(f"cloud radii in [{r.min():.4f}, {r.max():.4f}]")

# |f_j'(y)| = 2 |f_j(y)| / |y| telescopes along chains: P(t) = log 6 - t log 2
res = bowen_dimension(gs)
print(f"delta = {res.delta:.5f}   radial formula log 6 / log 2 = {math.log(6) / math.log(2):.5f}")
print(f"depth {res.diagnostics['depth']}, previous depth {res.diagnostics['delta_prev_depth']:.5f}")

# critical values 0 and infinity are attracting, away from the annulus
print("postcritical points:", postcritical_cloud(gs).points)

mu = conformal_measure(gs, res.delta, p_min=5, p_max=7)
ov = separating_overlap(gs, mu, 1, 3)
for e, m in zip(ov.eps, ov.mass):
    print(f"eps={e:.1e}  mass near both f_1^-1(J) and f_3^-1(J): {m:.3f}")
