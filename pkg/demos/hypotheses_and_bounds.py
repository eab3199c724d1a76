"""
Checking the hypotheses before trusting a number
================================================

Expansion, hyperbolicity and the open set condition for each bundled
system, with the upper bound log(sum deg) / log(lambda) next to delta.
"""

import math

from semigroup_dim.checks import expansion_estimate, hyperbolicity_check, osc_check, postcritical_cloud
from semigroup_dim.config import BUNDLED, load_config
from semigroup_dim.julia import julia_cloud
from semigroup_dim.thermo import bowen_dimension

print(f"{'system':8s} {'lambda':>7s} {'hyper':>6s} {'osc':>6s} {'delta':>8s} {'bound':>8s}")
for name in BUNDLED:
    cfg = load_config(name)
    gs = cfg.system()
    cloud = julia_cloud(gs, count=20000)
    exp = expansion_estimate(gs, cloud)
    _, hyper = hyperbolicity_check(cloud, postcritical_cloud(gs))
    osc = osc_check(gs, cfg.open_set)["verdict"] if cfg.open_set is not None else "-"
    res = bowen_dimension(gs, expansion=exp)
    bound = math.log(gs.total_degree) / math.log(exp.lam)
    print(f"{name:8s} {exp.lam:7.4f} {str(hyper):>6s} {osc:>6s} {res.delta:8.5f} {bound:8.5f}")
