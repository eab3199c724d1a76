import math

import numpy as np
import pytest
from scipy.optimize import brentq

from semigroup_dim.semigroup import GeneratorSystem, preimage_tree
from semigroup_dim.sphere import RationalMap
from semigroup_dim.thermo import (
    CriticalPointError,
    DegenerateSystemError,
    PressureEstimator,
    bowen_dimension,
    default_depth,
    entropy_lyapunov,
    level_log_sums,
    operator_log_sums,
    phi_tilde,
    pressure,
    pressure_curve,
    segment_logsumexp,
    transfer_apply,
)

from conftest import LOG3_LOG2, cloud, dimension, expansion, system


def test_default_depth_from_node_budget():
    assert default_depth(system("z2")) == 10
    assert default_depth(system("gasket")) == 10
    assert default_depth(system("annulus")) == 7
    assert default_depth(system("cubic_quadratic")) == 8
    assert default_depth(system("cubic_square")) == 8


def test_square_pressure_is_exact():
    t = np.linspace(0, 3, 13)
    curve = pressure_curve(system("z2"), t, x=1.0, n=12)
    assert np.max(np.abs(curve.P - (1 - t) * math.log(2))) < 1e-6


def test_annulus_pressure_matches_radial_formula():
    # |f_j'(y)| = 2 |f_j(y)| / |y| for z^2, z^2/4, z^2/3 telescopes along the
    # preimage chain in the plane metric; the spherical factors cancel in the
    # ratio estimator up to O(1/n), so P(t) = log 6 - t log 2.
    est = PressureEstimator(system("annulus"), 2.0, 7)
    for t in (0.0, 1.0, 2.0, 2.5, 3.0):
        assert est(t) == pytest.approx(math.log(6) - t * math.log(2), abs=1e-2)


@pytest.mark.parametrize("name", ["gasket", "square_affine", "cubic_square"])
def test_skew_and_base_accumulators_agree(name):
    tree = preimage_tree(system(name), 0.05 + 0.1j, 6)
    for t in (0.0, 0.7, 1.6, 3.0):
        a = level_log_sums(tree, t)
        for k in (1, 3, 6):
            assert operator_log_sums(tree, t, k) == pytest.approx(a[k - 1], abs=1e-12)


def test_transfer_apply_matches_one_tree_level():
    gs = system("square_affine")
    x = 0.3 - 0.2j
    tree = preimage_tree(gs, x, 1)
    for t in (0.5, 1.3):
        (v,) = transfer_apply(gs, t, lambda y: np.ones(y.shape), [x])
        assert math.log(v) == pytest.approx(level_log_sums(tree, t)[0], abs=1e-12)


def test_segment_logsumexp_against_direct_sums():
    vals = np.array([0.0, 1.0, -2.0, 700.0, 701.0])
    parent = np.array([0, 0, 1, 2, 2])
    out = segment_logsumexp(vals, parent, 4)
    assert out[0] == pytest.approx(math.log(1 + math.e))
    assert out[1] == pytest.approx(-2.0)
    assert out[2] == pytest.approx(700 + math.log(1 + math.e))
    assert out[3] == -np.inf


@pytest.mark.parametrize("name", ["gasket", "annulus", "cubic_quadratic"])
def test_pressure_decreasing_and_convex(name):
    curve = pressure_curve(system(name), np.linspace(0, 3, 20))
    d = np.diff(curve.P)
    assert np.all(d < 0)
    # the ratio estimator is a difference of convex functions; on affine
    # pressures its second differences sit at rounding level
    assert np.all(np.diff(d) >= -1e-8)


@pytest.mark.parametrize("name", ["gasket", "square_affine"])
def test_level_sums_are_convex_in_t(name):
    est = PressureEstimator(system(name), 0.1j, 6)
    rows = np.array([est.log_sums(t) for t in np.linspace(0, 3, 20)])
    assert np.all(np.diff(rows, 2, axis=0) >= -1e-12)


def test_pressure_at_zero_is_log_degree_for_z2():
    assert pressure(system("z2"), 0.0) == pytest.approx(math.log(2), abs=1e-12)


def test_gasket_dimension_matches_moran_root():
    moran = brentq(lambda t: 3 * 2.0**-t - 1, 0, 3)
    assert moran == pytest.approx(LOG3_LOG2, abs=1e-12)
    res = dimension("gasket")
    assert res.delta == pytest.approx(moran, abs=1e-3)
    assert res.diagnostics["depth"] == 10
    assert res.upper_bound == pytest.approx(moran, abs=1e-3)


@pytest.mark.parametrize("m,r", [(2, 3.0), (3, 4.0), (4, 5.0), (2, 2.5)])
def test_cantor_systems_match_moran_root(m, r):
    # m affine maps of ratio r with fixed points spread over [-1, 1]
    cs = [-1 + 2 * k / (m - 1) for k in range(m)]
    gs = GeneratorSystem(tuple(RationalMap.affine(r, -(r - 1) * c) for c in cs))
    moran = brentq(lambda t: m * r**-t - 1, 0, 3)
    assert bowen_dimension(gs, x=cs[0], n=9).delta == pytest.approx(moran, abs=1e-6)


def test_degenerate_system_is_rejected():
    with pytest.raises(DegenerateSystemError):
        bowen_dimension(GeneratorSystem((RationalMap.affine(2, 0),)), x=1.0, n=4)


def test_phi_tilde_at_critical_point():
    with pytest.raises(CriticalPointError):
        phi_tilde(system("z2"), 1, 0.0)
    assert phi_tilde(system("z2"), 1, 1.0) == pytest.approx(-math.log(2))


def test_depth_validation():
    with pytest.raises(ValueError):
        PressureEstimator(system("z2"), 1.0, 1)
    with pytest.raises(ValueError):
        from semigroup_dim.thermo import PressureCurve

        PressureCurve([(1.0, 0, 2, 0, 0), (0.5, 0, 2, 0, 0)])


def test_entropy_lyapunov_on_square():
    lyap, h = entropy_lyapunov(system("z2"), 1.0, x=1.0)
    assert lyap == pytest.approx(math.log(2), abs=1e-9)
    assert h == pytest.approx(math.log(2), abs=1e-9)


def test_entropy_on_gasket_equals_log_three():
    d = dimension("gasket").delta
    lyap, h = entropy_lyapunov(system("gasket"), d)
    assert lyap == pytest.approx(math.log(2), abs=1e-3)
    assert h == pytest.approx(math.log(3), abs=2e-3)


@pytest.mark.parametrize("name", ["z2", "gasket", "square_affine", "cubic_square"])
def test_bowen_bracket_and_diagnostics(name):
    res = dimension(name)
    lo, hi = res.bracket
    assert lo <= res.delta <= hi
    assert abs(res.P_residual) < 1e-8
    assert res.diagnostics["depth_error"] > 0
    assert res.diagnostics["lambda"] == pytest.approx(expansion(name).lam)
    js = res.to_json()
    assert set(js) == {"delta", "bracket", "P_residual", "upper_bound", "diagnostics"}


@pytest.mark.parametrize("name", ["z2", "gasket", "annulus", "square_affine", "cubic_quadratic", "cubic_square"])
def test_base_point_robustness(name):
    pts = cloud(name).finite[::3989][:5]
    assert len(pts) == 5
    results = [bowen_dimension(system(name), x=p, tol=1e-10) for p in pts]
    deltas = np.array([r.delta for r in results])
    err = max(r.diagnostics["depth_error"] for r in results)
    assert np.ptp(deltas) <= 2 * err
