import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semigroup_dim.checks import (
    Annulus,
    Disk,
    DiskComplement,
    HalfPlane,
    Intersection,
    Polygon,
    Union,
    attracting_cloud,
    base_point_clearance,
    expansion_estimate,
    hyperbolicity_check,
    min_chordal_gap,
    open_set_from_json,
    osc_check,
    postcritical_cloud,
    sample_open_set,
    unique_points,
)
from semigroup_dim.julia import PointCloud, julia_cloud
from semigroup_dim.semigroup import GeneratorSystem, blocked_system
from semigroup_dim.sphere import INF, RationalMap, is_infinite

from conftest import cloud, expansion, system

coord = st.integers(-40, 40).map(lambda k: k / 10)
points = st.builds(complex, coord, coord)


def test_unique_points_and_gap():
    u = unique_points([1, 1 + 1e-12, 2, INF, INF])
    assert u.size == 3 and u[0] == 1 and is_infinite(u[2])
    assert min_chordal_gap([0], [INF, 1]) == pytest.approx(math.sqrt(2))


def test_postcritical_clouds():
    ann = postcritical_cloud(system("annulus")).points
    assert ann.size == 2
    assert np.sum(is_infinite(ann)) == 1 and np.any(ann == 0)
    gas = postcritical_cloud(system("gasket")).points
    assert gas.size == 1 and is_infinite(gas[0])
    cubic_quadratic = postcritical_cloud(system("cubic_quadratic"), depth=1).points
    # critical values 0, 8 and infinity, then 0 -> 8, 8 -> 128, 72
    finite = np.sort(cubic_quadratic[~is_infinite(cubic_quadratic)].real)
    assert np.allclose(finite, [0, 8, 72, 128])


def test_hyperbolicity(bundled):
    gap, ok = hyperbolicity_check(cloud(bundled), postcritical_cloud(system(bundled)))
    assert ok and gap > 1e-2


def test_hyperbolicity_fails_when_critical_point_on_julia_set():
    # z^2 - 2: critical value -2 lies on the Julia set [-2, 2]
    gs = GeneratorSystem((RationalMap.polynomial([-2, 0, 1]),))
    gap, ok = hyperbolicity_check(julia_cloud(gs, count=5000), postcritical_cloud(gs))
    assert not ok


def test_attracting_cloud():
    z2 = attracting_cloud(system("z2")).points
    assert z2.size == 2 and np.any(np.abs(z2) < 1e-12) and np.any(is_infinite(z2))
    cubic_quadratic = attracting_cloud(system("cubic_quadratic"))
    assert cubic_quadratic.meta["skipped_lengths"] == []
    assert attracting_cloud(system("cubic_quadratic"), degree_cap=20).meta["skipped_lengths"] == [3]
    assert base_point_clearance(system("z2"), 1.0) == pytest.approx(math.sqrt(2))


@pytest.mark.parametrize("name", ["z2", "gasket", "annulus", "square_affine", "cubic_quadratic", "cubic_square"])
def test_expansion_verdicts(name):
    est = expansion(name)
    assert est.verdict
    assert est.lam > 1.9
    assert est.meta["tail_slope"] > 0.5 * est.loglam
    js = est.to_json()
    assert js["verdict"] == "pass" and len(js["log_min"]) == est.depths.size


def test_expansion_exact_for_square():
    est = expansion("z2")
    assert est.lam == pytest.approx(2.0, rel=1e-9)
    assert est.C == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("name,k", [("gasket", 2), ("square_affine", 2)])
def test_expansion_of_blocked_system_squares_lambda(name, k):
    gs = system(name)
    est = expansion_estimate(blocked_system(gs, k), julia_cloud(gs, count=5000))
    assert est.lam == pytest.approx(expansion(name).lam ** k, rel=0.1)


def test_parabolic_map_is_not_expanding():
    par = GeneratorSystem((RationalMap.polynomial([0.25, 0, 1]),))
    est = expansion_estimate(par, julia_cloud(par, count=5000))
    assert not est.verdict


def test_expansion_needs_a_large_cloud():
    with pytest.raises(ValueError):
        expansion_estimate(system("z2"), PointCloud(np.exp(1j * np.arange(100.0))))
    with pytest.raises(ValueError):
        expansion_estimate(system("z2"), cloud("z2"), n_max=3)


def test_shape_sdfs_by_hand():
    assert Disk(1j, 2).sdf(1j) == pytest.approx(2)
    assert Disk(0, 1).sdf(INF) == -np.inf
    assert DiskComplement(0, 1).sdf(3) == pytest.approx(2)
    assert DiskComplement(0, 1).sdf(INF) == np.inf
    assert Annulus(1, 3).sdf(2) == pytest.approx(1)
    assert Annulus(1, 3).sdf(0.5) == pytest.approx(-0.5)
    assert HalfPlane(0, 1j).sdf(2 + 3j) == pytest.approx(3)
    sq = Polygon((0, 1, 1 + 1j, 1j))
    assert sq.sdf(0.5 + 0.5j) == pytest.approx(0.5)
    assert sq.sdf(2 + 0.5j) == pytest.approx(-1)
    assert sq.sdf(0.5 + 0.1j) == pytest.approx(0.1)
    u = Union((Disk(0, 1), Disk(3, 1)))
    assert u.contains(3.5) and not u.contains(1.5)
    i = Intersection((Disk(0, 2), DiskComplement(0, 1)))
    assert i.contains(1.5) and not i.contains(0.5)
    assert i.bbox() == (-2, 2, -2, 2)


@given(points)
def test_polygon_agrees_with_halfplanes(z):
    # a convex polygon is the intersection of its edge half-planes
    tri = Polygon((-1, 1, 2j))
    v = (-1, 1, 2j)
    inner = [HalfPlane(v[k], 1j * (v[(k + 1) % 3] - v[k])) for k in range(3)]
    hp = Intersection(tuple(inner))
    s = float(tri.sdf(z))
    if abs(s) > 1e-9:
        assert (s > 0) == bool(hp.contains(z))


def test_shape_validation():
    with pytest.raises(ValueError):
        Disk(0, 0)
    with pytest.raises(ValueError):
        Annulus(2, 1)
    with pytest.raises(ValueError):
        HalfPlane(0, 0)
    with pytest.raises(ValueError):
        Polygon((0, 1, 2))


@pytest.mark.parametrize(
    "U",
    [
        Disk(1j, 2.0),
        DiskComplement(0.5, 1.0),
        Annulus(0.5, 2.0, 0.25j),
        HalfPlane(1.0, 1 + 1j),
        Polygon((0, 1, 1j)),
        Union((Disk(0, 1.0), Annulus(1.0, 2.0))),
        Intersection((Disk(0.01, 2.0), DiskComplement(0, 1.0))),
    ],
)
def test_open_set_json_round_trip(U):
    assert open_set_from_json(json.loads(json.dumps(U.to_json()))) == U


def test_open_set_json_rejects_unknowns():
    with pytest.raises(ValueError):
        open_set_from_json({"type": "blob"})
    with pytest.raises(ValueError):
        open_set_from_json({"type": "disk", "center": [0, 0], "radius": 1, "extra": 1})
    with pytest.raises(ValueError):
        open_set_from_json({"type": "union", "parts": []})


def test_sampling_stays_inside():
    rng = np.random.default_rng(0)
    for U in (Polygon((0, 1, 1j)), DiskComplement(0, 1.0), Annulus(1, 2)):
        z = sample_open_set(U, 1000, rng)
        assert z.size == 1000 and np.all(U.contains(z))
    with pytest.raises(ValueError):
        sample_open_set(Intersection((Disk(0, 1.0), Disk(5, 1.0))), 10, rng)


@pytest.mark.parametrize("seed", [0, 5])
def test_gasket_triangle_satisfies_osc(seed):
    cfg_U = open_set_from_json(
        {"type": "polygon", "vertices": [[0.5 * math.cos(a), 0.5 * math.sin(a)] for a in (math.pi / 2 + 2 * math.pi * k / 3 for k in range(3))]}
    )
    rep = osc_check(system("gasket"), cfg_U, rng_seed=seed)
    assert rep["verdict"] == "pass" and rep["samples"] == 20000


def test_cubic_square_open_set_satisfies_osc():
    from semigroup_dim.config import load_config

    cfg = load_config("cubic_square")
    assert osc_check(cfg.system(), cfg.open_set)["verdict"] == "pass"


def test_osc_failures_are_detected():
    # the annulus maps overlap: z^2 and z^2/3 pull back overlapping annuli
    rep = osc_check(system("annulus"), Annulus(1.0, 4.0))
    assert rep["verdict"] == "fail" and not rep["disjoint_ok"]
    rep = osc_check(system("gasket"), Disk(0, 1.0))
    assert rep["verdict"] == "fail"
