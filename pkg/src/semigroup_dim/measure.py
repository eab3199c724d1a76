"""Atomic conformal measures, ball masses, regularity and overlap audits, box counting.

Distances are chordal by default: the sphere of diameter 2 is embedded as the
unit sphere in R^3, where chordal distance is Euclidean distance, so a KD-tree
on the embedding answers chordal ball queries exactly.  ``euclidean=True``
switches to planar distance for sets inside C.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .julia import PointCloud
from .semigroup import GeneratorSystem
from .sphere import is_infinite, to_sphere
from .thermo import _cached_tree, default_base_point

log = logging.getLogger(__name__)


def _embed(points, euclidean):
    pts = np.asarray(points, dtype=complex).ravel()
    if euclidean:
        if np.any(is_infinite(pts)):
            raise ValueError("euclidean mode needs finite points")
        return np.column_stack([pts.real, pts.imag])
    return to_sphere(pts)


@dataclass
class AtomicMeasure:
    points: np.ndarray
    weights: np.ndarray
    t: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.points.size != self.weights.size or self.points.size == 0:
            raise ValueError("need matching, nonempty points and weights")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {self.weights.sum()!r}, not 1")
        self._trees = {}

    def __len__(self):
        return self.points.size

    def index(self, euclidean=False):
        if euclidean not in self._trees:
            self._trees[euclidean] = cKDTree(_embed(self.points, euclidean))
        return self._trees[euclidean]

    def integrate(self, psi):
        """Sum of weight * psi(atom); ``psi`` is vectorized."""
        return float(np.dot(self.weights, np.asarray(psi(self.points), dtype=float)))

    def write_csv(self, path, comments=()):
        with open(path, "w", newline="\n") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            fh.write("re,im,weight\n")
            for z, w in zip(self.points, self.weights):
                fh.write(f"{float(z.real)!r},{float(z.imag)!r},{float(w)!r}\n")


def conformal_measure(
    gs: GeneratorSystem, t: float, z=None, p_min: int = 6, p_max: int = 8, threads: int = 1
) -> AtomicMeasure:
    """Atoms at all depth-p preimages of ``z`` for p in [p_min, p_max], weight ∝ ||(f_u)'(y)||^(-t).

    At t = delta the level totals stay bounded in p, so no level dominates.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if not 1 <= p_min <= p_max:
        raise ValueError("need 1 <= p_min <= p_max")
    z = default_base_point(gs) if z is None else complex(z)
    tree = _cached_tree(gs, z, p_max, threads)
    pts = np.concatenate(tree.points[p_min - 1 : p_max])
    logw = np.concatenate([-t * L for L in tree.log_norm[p_min - 1 : p_max]])
    top = logw.max()
    if not np.isfinite(top):
        raise ValueError("zero normalizer")
    w = np.exp(logw - top)
    total = w.sum()
    w /= total
    # fold the float residue of the normalization into the heaviest atom
    w[np.argmax(w)] += 1.0 - w.sum()
    meta = {"base": [z.real, z.imag], "p_min": p_min, "p_max": p_max, "log_normalizer": float(top + math.log(total))}
    return AtomicMeasure(pts, w, t, meta)


def ball_mass(mu: AtomicMeasure, x, r, euclidean: bool = False):
    """Mass of the closed ball B(x, r); ``x`` may be an array of centres."""
    if not r > 0:
        raise ValueError("radius must be positive")
    tree = mu.index(euclidean)
    centres = _embed(np.atleast_1d(x), euclidean)
    hits = tree.query_ball_point(centres, r * (1 + 1e-12))
    out = np.array([mu.weights[h].sum() if h else 0.0 for h in hits])
    return out if np.ndim(x) else float(out[0])


def dyadic_radii(r_min, r_max):
    """r_max, r_max/2, ... down to the last value >= r_min."""
    if not 0 < r_min <= r_max:
        raise ValueError("need 0 < r_min <= r_max")
    k = int(math.floor(math.log2(r_max / r_min) + 1e-12))
    return r_max * 2.0 ** -np.arange(k + 1)


@dataclass
class RegularityReport:
    centres: np.ndarray
    radii: np.ndarray
    mass: np.ndarray  # (len(centres), len(radii))
    delta: float
    slope: float

    @property
    def ratio(self):
        return self.mass / self.radii[None, :] ** self.delta

    @property
    def ratio_range(self):
        return float(self.ratio.min()), float(self.ratio.max())

    def write_csv(self, path, comments=()):
        with open(path, "w", newline="\n") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            fh.write("x_re,x_im,r,mass,ratio\n")
            ratio = self.ratio
            for i, x in enumerate(self.centres):
                for k, r in enumerate(self.radii):
                    fh.write(f"{float(x.real)!r},{float(x.imag)!r},{float(r)!r},{float(self.mass[i, k])!r},{float(ratio[i, k])!r}\n")


def regularity_audit(
    mu: AtomicMeasure,
    delta: float,
    samples: int = 200,
    r_range=(1e-3, 1e-1),
    rng_seed: int = 0,
    euclidean: bool = False,
    min_atoms: int = 3,
) -> RegularityReport:
    """Ball masses at dyadic radii around weight-sampled atoms; pooled log-log slope.

    Refuses (ValueError) when the smallest balls typically hold fewer than
    ``min_atoms`` atoms: the measure is too coarse for the requested range.
    """
    if len(mu) < 2:
        raise ValueError("regularity audit needs more than one atom")
    radii = dyadic_radii(*r_range)
    if radii.size < 2:
        raise ValueError("r_range must span at least one doubling")
    rng = np.random.default_rng(rng_seed)
    idx = rng.choice(len(mu), size=samples, p=mu.weights)
    centres = mu.points[idx]
    tree = mu.index(euclidean)
    emb = _embed(centres, euclidean)
    # distinct positions only: trees rooted at a fixed point repeat atoms across levels
    counts = np.array([len(h) for h in tree.query_ball_point(emb, radii[-1])])
    counts -= np.array([len(h) for h in tree.query_ball_point(emb, 1e-12)]) - 1
    if np.median(counts) < min_atoms:
        raise ValueError(
            f"insufficient atoms inside r_range resolution: median {np.median(counts):.0f} atoms at r={radii[-1]:.2e}"
        )
    mass = np.column_stack([ball_mass(mu, centres, r, euclidean) for r in radii])
    lr = np.broadcast_to(np.log(radii)[None, :], mass.shape).ravel()
    slope = float(np.polyfit(lr, np.log(mass).ravel(), 1)[0])
    return RegularityReport(centres, radii, mass, float(delta), slope)


def _distinct(points):
    """Distinct points (to 12 decimals) and the inverse index, via a 1-D complex sort."""
    pts = np.asarray(points, dtype=complex).ravel()
    inf = is_infinite(pts)
    key = np.where(inf, complex(np.inf, 0), np.round(pts.real, 12) + 1j * np.round(pts.imag, 12))
    uniq, first, inverse = np.unique(key, return_index=True, return_inverse=True)
    return pts[first], inverse.ravel()


def _nn_spacing(emb):
    d, _ = cKDTree(emb).query(emb, k=2)
    return float(np.median(d[:, 1]))


@dataclass
class OverlapReport:
    i: int
    j: int
    eps: np.ndarray
    mass: np.ndarray

    def to_json(self):
        return {"i": self.i, "j": self.j, "eps": self.eps.tolist(), "mass": self.mass.tolist()}


def separating_overlap(
    gs: GeneratorSystem,
    mu: AtomicMeasure,
    i: int,
    j: int,
    eps=None,
    cloud: Optional[PointCloud] = None,
    euclidean: bool = False,
) -> OverlapReport:
    """Mass of atoms within eps of both f_i^{-1}(cloud) and f_j^{-1}(cloud), over an eps sweep.

    ``cloud`` defaults to the atoms of ``mu``.  The default sweep is dyadic
    from 0.1 down to twice the median nearest-neighbour spacing of the
    preimage clouds; below that the clouds' discreteness dominates.
    """
    if i == j:
        raise ValueError("separating overlap needs i != j")
    pts = mu.points if cloud is None else cloud.points
    pts = pts[~is_infinite(pts)] if euclidean else pts
    # duplicate points (repeated atoms) degrade KD-tree queries badly
    pts = _distinct(pts)[0]
    pre_i = _embed(_distinct(gs[i].preimage_array(pts, gs.tol))[0], euclidean)
    pre_j = _embed(_distinct(gs[j].preimage_array(pts, gs.tol))[0], euclidean)
    if eps is None:
        floor = 2 * max(_nn_spacing(pre_i), _nn_spacing(pre_j))
        eps = dyadic_radii(min(floor, 0.1), 0.1)
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    atoms, inverse = _distinct(mu.points)
    atoms = _embed(atoms, euclidean)
    cap = float(eps.max()) * (1 + 1e-9)
    di, _ = cKDTree(pre_i).query(atoms, distance_upper_bound=cap)
    dj, _ = cKDTree(pre_j).query(atoms, distance_upper_bound=cap)
    near = np.maximum(di, dj)[inverse.ravel()]
    mass = np.array([mu.weights[near <= e].sum() for e in eps])
    return OverlapReport(i, j, eps, mass)


@dataclass
class BoxCount:
    radii: np.ndarray
    counts: np.ndarray
    slope: float
    intercept: float

    def write_csv(self, path, comments=()):
        with open(path, "w", newline="\n") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            fh.write("r,N_r\n")
            for r, n in zip(self.radii, self.counts):
                fh.write(f"{float(r)!r},{int(n)}\n")


def _grid_count(emb, r, origin):
    return np.unique(np.floor((emb - origin) / r).astype(np.int64), axis=0).shape[0]


def box_dimension(
    cloud: PointCloud,
    r_range=None,
    origin=None,
    euclidean: bool = False,
) -> BoxCount:
    """Grid-cover counts N_r at dyadic r and the slope of log N_r against -log r.

    Cells are cubes of side r in the sphere embedding (squares in the plane
    with ``euclidean``), an upper-bound proxy for the minimal cover.  The
    automatic range runs from an eighth of the cloud's extent down to the last
    r at which every occupied cell holds on average at least 8 points.
    """
    pts = cloud.points
    if len(pts) < 10_000:
        warnings.warn(f"box counting on {len(pts)} points; >= 1e4 recommended", stacklevel=2)
    emb = _embed(pts, euclidean)
    origin = emb.min(axis=0) - 1e-9 if origin is None else np.asarray(origin, dtype=float)
    if r_range is None:
        extent = float(np.max(emb.max(axis=0) - emb.min(axis=0)))
        r = 2.0 ** math.floor(math.log2(extent / 8))
        radii, counts = [], []
        while True:
            n = _grid_count(emb, r, origin)
            if n * 8 > len(pts) or r < 1e-12:
                break
            radii.append(r)
            counts.append(n)
            r /= 2
        radii, counts = np.array(radii), np.array(counts)
    else:
        radii = dyadic_radii(*r_range)
        counts = np.array([_grid_count(emb, r, origin) for r in radii])
    if radii.size < 3:
        raise ValueError("degenerate box-counting fit: fewer than 3 radii")
    slope, intercept = np.polyfit(-np.log(radii), np.log(counts), 1)
    return BoxCount(radii, counts, float(slope), float(intercept))
