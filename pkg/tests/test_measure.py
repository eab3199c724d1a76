import math
import warnings

import numpy as np
import pytest

from semigroup_dim.julia import PointCloud
from semigroup_dim.measure import (
    AtomicMeasure,
    ball_mass,
    box_dimension,
    conformal_measure,
    dyadic_radii,
    regularity_audit,
    separating_overlap,
)
from semigroup_dim.thermo import transfer_apply

from conftest import LOG3_LOG2, system


@pytest.fixture(scope="module")
def gasket_measure():
    return conformal_measure(system("gasket"), LOG3_LOG2, p_min=10, p_max=12)


def test_square_measure_is_arc_length():
    mu = conformal_measure(system("z2"), 1.0, 1.0, 6, 8)
    assert mu.weights.sum() == pytest.approx(1.0, abs=1e-12)
    # atoms sit on arc endpoints; shift arcs by half a finest spacing
    ang = (np.angle(mu.points) + np.pi / 512) % (2 * np.pi)
    arcs = np.bincount((ang / (2 * np.pi / 16)).astype(int), weights=mu.weights, minlength=16)
    assert np.allclose(arcs, 1 / 16, atol=1e-12)
    assert ball_mass(mu, 1.0, 2.0) == pytest.approx(1.0)


def test_gasket_cells_carry_equal_mass(gasket_measure):
    mu = gasket_measure
    p = [0.5 * np.exp(1j * (np.pi / 2 + 2 * np.pi * k / 3)) for k in range(3)]
    cells = [mu.weights[np.abs(mu.points - pk) < 0.45].sum() for pk in p]
    assert np.allclose(cells, 1 / 3, atol=0.01)


def test_measure_validation():
    with pytest.raises(ValueError):
        AtomicMeasure([1, 2], [0.5, 0.4], 1.0)
    with pytest.raises(ValueError):
        AtomicMeasure([1], [1.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        AtomicMeasure([1, 2], [1.5, -0.5], 1.0)
    with pytest.raises(ValueError):
        conformal_measure(system("z2"), 0.0)
    with pytest.raises(ValueError):
        conformal_measure(system("z2"), 1.0, p_min=5, p_max=4)
    with pytest.raises(ValueError):
        ball_mass(AtomicMeasure([0], [1.0], 1.0), 0, 0.0)


def test_atoms_csv(tmp_path):
    mu = AtomicMeasure([1 + 1j, -2.5], [0.25, 0.75], 1.0)
    path = tmp_path / "a.csv"
    mu.write_csv(path, ["x"])
    assert path.read_text() == "# x\nre,im,weight\n1.0,1.0,0.25\n-2.5,0.0,0.75\n"


def test_ball_mass_vectorized_and_euclidean():
    mu = AtomicMeasure([0, 1, 2, 3], [0.1, 0.2, 0.3, 0.4], 1.0)
    assert np.allclose(ball_mass(mu, np.array([0, 3]), 1.0, euclidean=True), [0.3, 0.7])
    assert ball_mass(mu, 10.0, 0.5, euclidean=True) == 0.0


def test_dyadic_radii():
    assert np.allclose(dyadic_radii(0.1, 0.8), [0.8, 0.4, 0.2, 0.1])
    with pytest.raises(ValueError):
        dyadic_radii(1, 0.5)


@pytest.mark.parametrize("i,j", [(1, 2), (1, 3), (2, 3)])
def test_gasket_is_separating(gasket_measure, i, j):
    rep = separating_overlap(system("gasket"), gasket_measure, i, j, eps=[1e-4])
    assert rep.mass[0] == 0.0


def test_annulus_overlap_bounded_away_from_zero():
    mu = conformal_measure(system("annulus"), 2.5786, p_min=5, p_max=7)
    rep = separating_overlap(system("annulus"), mu, 1, 3)
    assert rep.eps.size >= 3
    assert rep.mass.min() > 0.05
    with pytest.raises(ValueError):
        separating_overlap(system("annulus"), mu, 2, 2)


def test_regularity_slopes():
    mu = conformal_measure(system("z2"), 1.0, 1.0, 14, 16)
    assert regularity_audit(mu, 1.0).slope == pytest.approx(1.0, abs=0.02)


def test_regularity_refuses_coarse_measure():
    mu = conformal_measure(system("z2"), 1.0, 1.0, 2, 3)
    with pytest.raises(ValueError, match="insufficient atoms"):
        regularity_audit(mu, 1.0)


def test_regularity_report_csv(tmp_path, gasket_measure):
    rep = regularity_audit(gasket_measure, LOG3_LOG2, samples=20)
    lo, hi = rep.ratio_range
    assert 0 < lo <= hi
    rep.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "x_re,x_im,r,mass,ratio" and len(lines) == 1 + 20 * rep.radii.size


def test_box_dimension_of_circle_and_square():
    rng = np.random.default_rng(1)
    circ = PointCloud(np.exp(1j * rng.uniform(0, 2 * np.pi, 100_000)))
    assert box_dimension(circ).slope == pytest.approx(1.0, abs=0.03)
    sq = rng.uniform(0, 1, (200_000, 2))
    square = PointCloud(sq[:, 0] + 1j * sq[:, 1])
    assert box_dimension(square, euclidean=True).slope == pytest.approx(2.0, abs=0.05)


def test_box_dimension_warnings_and_csv(tmp_path):
    pts = PointCloud(np.exp(1j * np.linspace(0, 6, 500)))
    with pytest.warns(UserWarning):
        with pytest.raises(ValueError):
            box_dimension(pts, r_range=(0.5, 0.6))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bc = box_dimension(pts, r_range=(0.01, 0.4))
    bc.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_text().splitlines()[0] == "r,N_r"


def test_stationarity_under_transfer_operator(gasket_measure):
    mu, gs = gasket_measure, system("gasket")
    rng = np.random.default_rng(0)
    for _ in range(5):
        c0 = mu.points[rng.integers(len(mu))]

        def psi(z, c0=c0):
            return np.exp(-np.abs(z - c0) ** 2 / 0.01)

        lhs = mu.integrate(lambda z: transfer_apply(gs, LOG3_LOG2, psi, z))
        assert lhs == pytest.approx(mu.integrate(psi), abs=0.05)
