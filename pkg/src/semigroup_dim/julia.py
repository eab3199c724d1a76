"""Julia-set point clouds by backward iteration, plus occupancy-grid rendering."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .semigroup import GeneratorSystem, blocked_system, preimage_tree
from .sphere import INF, RationalMap, cluster_points, is_infinite, poly_roots

log = logging.getLogger(__name__)

REPELLING, ATTRACTING, INDIFFERENT = "repelling", "attracting", "indifferent"

# chains per independent RNG stream in random_walk; fixed so output is
# independent of the worker count
CHAIN_BLOCK = 256


class SeedSelectionError(RuntimeError):
    pass


@dataclass
class PointCloud:
    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex).ravel()
        if self.points.size == 0:
            raise ValueError("empty point cloud")

    def __len__(self):
        return self.points.size

    @property
    def finite(self):
        return self.points[~is_infinite(self.points)]


def fixed_points(f: RationalMap, cluster=1e-7):
    """Fixed points of ``f`` as ``[(z, multiplier modulus, class), ...]``.

    Solves num(z) - z den(z) = 0 projectively (d + 1 solutions); the multiplier
    modulus is the spherical derivative norm, which equals |f'(z)| at a fixed point.
    """
    num = np.zeros(f.degree + 2, dtype=complex)
    num[: len(f.num)] = f.num
    zden = np.zeros(f.degree + 2, dtype=complex)
    zden[1 : len(f.den) + 1] = f.den
    roots = poly_roots(num - zden, degree=f.degree + 1)
    out = []
    for z, mult in cluster_points(roots, cluster):
        mod = f.deriv_norm(z)
        if mod > 1 + 1e-9:
            cls = REPELLING
        elif mod < 1 - 1e-9:
            cls = ATTRACTING
        else:
            cls = INDIFFERENT
        out.append((z, mod, cls))
    return out


def find_seed(gs: GeneratorSystem, max_word=3, degree_cap=64):
    """A repelling fixed point to start backward iteration from.

    Tries f_1, f_2, ... first; if no generator has a repelling fixed point,
    falls back to compositions of length 2..max_word.  Candidates within 1e-6
    of an attracting fixed point of any generator are skipped.
    """
    attracting = [z for f in gs.gens for z, _, c in fixed_points(f) if c == ATTRACTING]

    def ok(z):
        if is_infinite(z):
            return False
        return all(abs(z - a) > 1e-6 for a in attracting if not is_infinite(a))

    for j, f in enumerate(gs.gens, start=1):
        for z, _, cls in fixed_points(f):
            if cls == REPELLING and ok(z):
                return complex(z), (j,)
    for n in range(2, max_word + 1):
        try:
            blocked = blocked_system(gs, n, degree_cap)
        except ValueError:
            break
        words = list(itertools.product(range(1, gs.m + 1), repeat=n))
        for word, f in zip(words, blocked.gens):
            for z, _, cls in fixed_points(f):
                if cls == REPELLING and ok(z):
                    return complex(z), word
    raise SeedSelectionError("no finite repelling fixed point found among short words")


def _walk_block(gs, start, n_chains, steps, seed_seq):
    """Random backward walk for one block of chains; returns (steps, n_chains) points."""
    rng = np.random.default_rng(seed_seq)
    S = gs.total_degree
    gen_of = np.concatenate([np.full(f.degree, j) for j, f in enumerate(gs.gens)])
    root_of = np.concatenate([np.arange(f.degree) for f in gs.gens])
    x = np.full(n_chains, start, dtype=complex)
    out = np.empty((steps, n_chains), dtype=complex)
    for s in range(steps):
        branch = np.minimum((rng.random(n_chains) * S).astype(int), S - 1)
        g = gen_of[branch]
        r = root_of[branch]
        new = np.empty_like(x)
        for j, f in enumerate(gs.gens):
            rows = np.nonzero(g == j)[0]
            if rows.size:
                roots = f.preimage_array(x[rows], gs.tol)
                new[rows] = roots[np.arange(rows.size), r[rows]]
        x = new
        out[s] = x
    return out


def julia_cloud(
    gs: GeneratorSystem,
    method="random_walk",
    depth=None,
    count=None,
    rng_seed=0,
    seed_point=None,
    burn_in=50,
    threads=1,
) -> PointCloud:
    """Approximate J(G) by backward orbits of a repelling fixed point.

    ``full_tree`` returns every depth-``depth`` preimage of the seed.
    ``random_walk`` runs independent chains x_{k+1} = random preimage of x_k,
    each of the total-degree inverse branches chosen with equal probability,
    drops ``burn_in`` steps per chain and returns ``count`` points ordered by
    chain index.
    """
    if seed_point is None:
        seed_point, seed_word = find_seed(gs)
    else:
        seed_word = None
    meta = {
        "method": method,
        "seed_point": [complex(seed_point).real, complex(seed_point).imag],
        "seed_word": list(seed_word) if seed_word else None,
        "rng_seed": rng_seed,
    }
    if method == "full_tree":
        if depth is None:
            raise ValueError("full_tree needs a depth")
        tree = preimage_tree(gs, seed_point, depth, threads=threads)
        meta["depth"] = depth
        return PointCloud(tree.points[-1], meta)
    if method != "random_walk":
        raise ValueError(f"unknown method {method!r}")
    if count is None or count < 1:
        raise ValueError("random_walk needs a positive count")
    n_chains = int(min(count, 4 * CHAIN_BLOCK))
    steps = -(-count // n_chains)
    blocks = [(i, min(CHAIN_BLOCK, n_chains - i)) for i in range(0, n_chains, CHAIN_BLOCK)]
    seqs = np.random.SeedSequence(rng_seed).spawn(len(blocks))

    def run(k):
        _, size = blocks[k]
        return _walk_block(gs, seed_point, size, burn_in + steps, seqs[k])[burn_in:]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(blocks))))
    else:
        parts = [run(k) for k in range(len(blocks))]
    # chain-major: all kept steps of chain 0, then chain 1, ...
    pts = np.concatenate([p.T.ravel() for p in parts])[:count]
    meta.update(count=count, burn_in=burn_in, chains=n_chains)
    return PointCloud(pts, meta)


def render(cloud: PointCloud, bounds, resolution):
    """Binary occupancy grid; row 0 is the top edge (largest imaginary part).

    ``bounds = (re_min, re_max, im_min, im_max)``, ``resolution = (W, H)``.
    """
    x0, x1, y0, y1 = map(float, bounds)
    W, H = map(int, resolution)
    if not (x1 > x0 and y1 > y0 and W > 0 and H > 0):
        raise ValueError("empty bounds or resolution")
    pts = cloud.finite
    inside = (pts.real >= x0) & (pts.real <= x1) & (pts.imag >= y0) & (pts.imag <= y1)
    pts = pts[inside]
    col = np.minimum(((pts.real - x0) / (x1 - x0) * W).astype(int), W - 1)
    row = np.minimum(((y1 - pts.imag) / (y1 - y0) * H).astype(int), H - 1)
    grid = np.zeros((H, W), dtype=bool)
    grid[row, col] = True
    return grid


def cell_centers(grid, bounds):
    x0, x1, y0, y1 = map(float, bounds)
    H, W = grid.shape
    row, col = np.nonzero(grid)
    re = x0 + (col + 0.5) * (x1 - x0) / W
    im = y1 - (row + 0.5) * (y1 - y0) / H
    return re + 1j * im


def write_pgm(grid, path, comments=()):
    """Plain (P2) PGM, maxval 1, set cells = 1."""
    H, W = grid.shape
    lines = ["P2"] + [f"# {c}" for c in comments] + [f"{W} {H}", "1"]
    lines += [" ".join("1" if v else "0" for v in row) for row in grid]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_pgm(path):
    with open(path) as fh:
        tokens = [t for line in fh if not line.startswith("#") for t in line.split()]
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    W, H, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    vals = np.array(tokens[4 : 4 + W * H], dtype=int).reshape(H, W)
    return vals, maxval


def write_points_csv(points, path, comments=()):
    """CSV with header ``re,im``; infinity is written as ``inf,0``."""
    pts = np.asarray(points, dtype=complex).ravel()
    with open(path, "w", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write("re,im\n")
        for z in pts:
            if is_infinite(z):
                fh.write("inf,0\n")
            else:
                fh.write(f"{float(z.real)!r},{float(z.imag)!r}\n")


def read_points_csv(path):
    pts = []
    with open(path) as fh:
        rows = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if rows[0] != "re,im":
        raise ValueError("expected header re,im")
    for r in rows[1:]:
        a, b = r.split(",")
        pts.append(INF if a == "inf" else complex(float(a), float(b)))
    return np.array(pts, dtype=complex)
