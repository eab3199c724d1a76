import numpy as np
import pytest

from semigroup_dim.julia import (
    ATTRACTING,
    REPELLING,
    PointCloud,
    find_seed,
    fixed_points,
    julia_cloud,
    read_pgm,
    read_points_csv,
    render,
    write_pgm,
    write_points_csv,
)
from semigroup_dim.semigroup import GeneratorSystem
from semigroup_dim.sphere import INF, RationalMap, is_infinite

from conftest import circle_cells, system


def test_fixed_points_of_square():
    fp = fixed_points(RationalMap.polynomial([0, 0, 1]))
    by_class = {}
    for z, mod, cls in fp:
        by_class.setdefault(cls, []).append((z, mod))
    assert len(by_class[REPELLING]) == 1
    z, mod = by_class[REPELLING][0]
    assert z == pytest.approx(1) and mod == pytest.approx(2)
    assert len(by_class[ATTRACTING]) == 2


def test_seeds():
    z, word = find_seed(system("z2"))
    assert z == pytest.approx(1) and word == (1,)
    gas = system("gasket")
    z, word = find_seed(gas)
    assert z == pytest.approx(0.5j) and word == (1,)


def test_seed_falls_back_to_words_for_parabolic_map():
    # z^2 + 1/4: parabolic fixed point 1/2, superattracting infinity
    par = GeneratorSystem((RationalMap.polynomial([0.25, 0, 1]),))
    z, word = find_seed(par)
    assert len(word) == 2
    f = par.gens[0]
    assert f(f(z)) == pytest.approx(z)


def test_random_walk_on_unit_circle_and_deterministic():
    gs = system("z2")
    c = julia_cloud(gs, count=3000, rng_seed=7)
    assert len(c) == 3000
    assert np.allclose(np.abs(c.points), 1, atol=1e-9)
    d = julia_cloud(gs, count=3000, rng_seed=7, threads=3)
    assert np.array_equal(c.points, d.points)
    e = julia_cloud(gs, count=3000, rng_seed=8)
    assert not np.array_equal(c.points, e.points)


def test_random_walk_covers_chains_beyond_one_block():
    gs = system("gasket")
    c = julia_cloud(gs, count=5000, rng_seed=1, threads=2)
    assert c.meta["chains"] == 1024
    assert np.array_equal(c.points, julia_cloud(gs, count=5000, rng_seed=1).points)


def test_full_tree_cloud():
    gs = system("annulus")
    c = julia_cloud(gs, "full_tree", depth=4)
    assert len(c) == 6**4
    assert np.all((np.abs(c.points) > 0.99) & (np.abs(c.points) < 4.01))
    with pytest.raises(ValueError):
        julia_cloud(gs, "full_tree")
    with pytest.raises(ValueError):
        julia_cloud(gs, "bogus", count=10)


def test_render_unit_circle_against_brute_force_cells():
    gs = system("z2")
    bounds, res = (-2.0, 2.0, -2.0, 2.0), (512, 512)
    grid = render(julia_cloud(gs, count=400_000), bounds, res)
    truth = circle_cells(1.0, bounds, res)
    assert not np.any(grid & ~truth)
    assert grid.sum() >= 0.97 * truth.sum()
    # the crossing count of a grid by a circle is about 8 r / h
    assert truth.sum() == pytest.approx(8 / (4 / 512), rel=0.01)


def test_render_orientation_row_zero_is_top():
    cloud = PointCloud(np.array([0.9 + 0.9j]))
    grid = render(cloud, (-1, 1, -1, 1), (4, 4))
    assert grid[0, 3] and grid.sum() == 1
    with pytest.raises(ValueError):
        render(cloud, (1, -1, -1, 1), (4, 4))


def test_pgm_round_trip(tmp_path):
    grid = np.zeros((3, 5), dtype=bool)
    grid[1, 2] = grid[0, 4] = True
    path = tmp_path / "g.pgm"
    write_pgm(grid, path, ["hello"])
    text = path.read_text()
    assert text.startswith("P2\n# hello\n5 3\n1\n")
    vals, maxval = read_pgm(path)
    assert maxval == 1 and np.array_equal(vals.astype(bool), grid)


def test_points_csv_round_trip_with_infinity(tmp_path):
    pts = np.array([1 + 2j, -0.5j, INF])
    path = tmp_path / "p.csv"
    write_points_csv(pts, path, ["meta"])
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# meta", "re,im"] and lines[-1] == "inf,0"
    back = read_points_csv(path)
    assert np.array_equal(back[:2], pts[:2]) and is_infinite(back[2])


def test_empty_cloud_rejected():
    with pytest.raises(ValueError):
        PointCloud(np.array([]))
