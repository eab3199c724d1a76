"""Validity checkers: expansion, hyperbolicity, attracting set, open set condition.

The sets involved (postcritical set, attracting set, Julia set) are closures of
infinite unions; every checker works on finite clouds with explicit caps and
returns measured margins rather than certificates.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .julia import ATTRACTING, PointCloud, fixed_points
from .semigroup import GeneratorSystem, _grow_level, blocked_system, preimage_tree
from .sphere import INF, is_infinite, to_sphere

log = logging.getLogger(__name__)


def unique_points(points, resolution=1e-9):
    """Deduplicate sphere points on a ``resolution`` grid of the embedding, keeping order."""
    pts = np.asarray(points, dtype=complex).ravel()
    keys = np.round(to_sphere(pts) / resolution).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return pts[np.sort(first)]


def min_chordal_gap(a, b):
    """Smallest chordal distance between two point sets."""
    ta = cKDTree(to_sphere(np.asarray(a, dtype=complex).ravel()))
    d, _ = ta.query(to_sphere(np.asarray(b, dtype=complex).ravel()))
    return float(np.min(d))


# ---------------------------------------------------------------- postcritical


def postcritical_cloud(gs: GeneratorSystem, depth: int = 3) -> PointCloud:
    """Critical values of the generators and their forward images under words up to ``depth``.

    Polynomial generators always contribute infinity, including affine ones
    whose critical set is empty.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    values = []
    for f in gs.gens:
        crit = f.critical_points(gs.tol)
        if crit.size:
            values.extend(np.atleast_1d(f(crit, gs.tol)))
        if f.is_polynomial:
            values.append(INF)
    level = unique_points(values) if values else np.zeros(0, dtype=complex)
    seen = [level]
    for _ in range(depth):
        if level.size == 0:
            break
        nxt = unique_points(np.concatenate([np.atleast_1d(f(level, gs.tol)) for f in gs.gens]))
        seen.append(nxt)
        level = nxt
    pts = unique_points(np.concatenate(seen)) if seen else np.zeros(0, dtype=complex)
    return PointCloud(pts if pts.size else np.array([INF]), {"kind": "postcritical", "depth": depth})


def hyperbolicity_check(julia: PointCloud, postcritical: PointCloud, margin: float = 1e-2):
    """(min chordal distance between the clouds, passes iff distance > margin)."""
    if len(julia) == 0 or len(postcritical) == 0:
        raise ValueError("clouds must be nonempty")
    gap = min_chordal_gap(julia.points, postcritical.points)
    return gap, gap > margin


# -------------------------------------------------------------------- attracting


def attracting_cloud(gs: GeneratorSystem, word_cap: int = 3, forward_depth: int = 2, degree_cap: int = 64):
    """Attracting fixed points of words up to ``word_cap``, pushed forward ``forward_depth`` times.

    Word lengths whose compositions exceed ``degree_cap`` are skipped and
    recorded in the metadata.
    """
    found = []
    skipped = []
    for n in range(1, word_cap + 1):
        try:
            block = gs if n == 1 else blocked_system(gs, n, degree_cap)
        except ValueError:
            skipped.append(n)
            continue
        for f in block.gens:
            found.extend(z for z, _, cls in fixed_points(f) if cls == ATTRACTING)
    level = unique_points(found) if found else np.zeros(0, dtype=complex)
    seen = [level]
    for _ in range(forward_depth):
        if level.size == 0:
            break
        level = unique_points(np.concatenate([np.atleast_1d(f(level, gs.tol)) for f in gs.gens]))
        seen.append(level)
    pts = unique_points(np.concatenate(seen)) if found else np.zeros(0, dtype=complex)
    meta = {"kind": "attracting", "word_cap": word_cap, "forward_depth": forward_depth, "skipped_lengths": skipped}
    if pts.size == 0:
        meta["empty"] = True
        pts = np.array([INF])
    return PointCloud(pts, meta)


def base_point_clearance(gs: GeneratorSystem, x, word_cap=2, depth=3):
    """Chordal distance from ``x`` to the approximated A(G) and P(G)."""
    pc = postcritical_cloud(gs, depth)
    ac = attracting_cloud(gs, word_cap, depth)
    pts = np.concatenate([pc.points, ac.points])
    return min_chordal_gap(pts, np.array([x]))


# --------------------------------------------------------------------- expansion


@dataclass
class ExpansionEstimate:
    """Per-depth minima of the chain norm and the fitted m_n ~ C lambda^n."""

    depths: np.ndarray
    log_min: np.ndarray
    logC: float
    loglam: float
    verdict: bool
    n_samples: int
    meta: dict = field(default_factory=dict)

    @property
    def lam(self):
        return math.exp(self.loglam)

    @property
    def C(self):
        return math.exp(self.logC)

    def to_json(self):
        return {
            "depths": [int(n) for n in self.depths],
            "log_min": [float(v) for v in self.log_min],
            "C": self.C,
            "lambda": self.lam,
            "verdict": "pass" if self.verdict else "fail",
            "n_samples": self.n_samples,
            **self.meta,
        }


def _beam_minima(gs, points, log_norm, steps, width):
    """Minimum chain norm per extra level, following only the ``width`` smallest nodes.

    Each value bounds the true minimum from above, so a stall here cannot be
    an artefact of the truncation.
    """
    out = []
    for _ in range(steps):
        pts, log_norm, _, _, _, _ = _grow_level(gs, points, log_norm, None)
        if pts.size > width:
            keep = np.argpartition(log_norm, width - 1)[:width]
            keep.sort()
            pts, log_norm = pts[keep], log_norm[keep]
        points = pts
        out.append(float(np.min(log_norm)))
    return np.array(out)


def expansion_estimate(
    gs: GeneratorSystem,
    cloud: PointCloud,
    n_max: Optional[int] = None,
    n_samples: int = 64,
    budget: int = 2_000_000,
    margin: float = 0.02,
    beam_width: int = 2048,
) -> ExpansionEstimate:
    """Fit log min ||(f_u)'(y)|| ~ log C + n log lambda over the backward trees of cloud points.

    A tree node (u, y) rooted at a Julia point x is a point of the skew-product
    Julia set whose n-step derivative is (f_u)'(y), so the minimum over nodes
    samples the infimum in the definition of expanding.  The fit uses
    n = 2..n_max (n = 1 is excluded, where C dominates).

    Polynomial growth (a parabolic point) mimics a small lambda over a few
    levels, so the verdict also follows the ``beam_width`` weakest nodes out to
    depth 8 n_max and requires the slope over the second half of that range
    to stay above half the fitted log lambda.
    """
    if len(cloud) < 1000:
        raise ValueError("expansion_estimate needs a cloud of at least 1000 points")
    if n_max is not None and n_max < 4:
        raise ValueError("n_max must be >= 4 to fit at least 3 depths")
    S = gs.total_degree
    if n_max is None:
        n_max = int(math.floor(math.log(budget / n_samples) / math.log(S))) if S > 1 else 8
        n_max = max(4, min(8, n_max))
    # fewer roots rather than a tree over budget
    n_samples = max(1, min(n_samples, int(budget // S**n_max)))
    pts = cloud.finite
    idx = np.unique(np.linspace(0, pts.size - 1, min(n_samples, pts.size)).astype(int))
    roots = pts[idx]
    tree = preimage_tree(gs, roots, n_max)
    log_min = np.array([float(np.min(L)) for L in tree.log_norm])
    depths = np.arange(1, n_max + 1)
    fit_n, fit_v = depths[1:], log_min[1:]
    if not np.all(np.isfinite(fit_v)):
        return ExpansionEstimate(depths, log_min, -math.inf, -math.inf, False, roots.size, {"critical": True})
    loglam, logC = np.polyfit(fit_n, fit_v, 1)
    long_n = 8 * n_max
    L = tree.log_norm[-1]
    keep = np.sort(np.argsort(L, kind="stable")[:beam_width])
    beam = _beam_minima(gs, tree.points[-1][keep], L[keep], long_n - n_max, beam_width)
    tail = np.concatenate([log_min, beam])
    half = long_n // 2
    tail_slope = float((tail[long_n - 1] - tail[half - 1]) / (long_n - half))
    verdict = bool(
        loglam > math.log1p(margin) and np.isfinite(tail_slope) and tail_slope > 0.5 * loglam
    )
    meta = {
        "n_max": int(n_max),
        "long_depth": int(long_n),
        "tail_slope": tail_slope,
        "beam_width": int(beam_width),
    }
    return ExpansionEstimate(depths, log_min, float(logC), float(loglam), verdict, roots.size, meta)


# ---------------------------------------------------------------------- open sets


class OpenSet:
    """Open subset of the sphere described by a signed distance (positive inside)."""

    kind = ""

    def sdf(self, z):
        raise NotImplementedError

    def bbox(self):
        return None

    def contains(self, z, margin=0.0):
        return self.sdf(z) > margin

    def to_json(self):
        raise NotImplementedError


def _finite(z):
    z = np.asarray(z, dtype=complex)
    inf = is_infinite(z)
    return np.where(inf, 0.0, z), inf


@dataclass(frozen=True)
class Disk(OpenSet):
    center: complex
    radius: float
    kind = "disk"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")

    def sdf(self, z):
        zf, inf = _finite(z)
        return np.where(inf, -np.inf, self.radius - np.abs(zf - self.center))

    def bbox(self):
        c, r = complex(self.center), self.radius
        return (c.real - r, c.real + r, c.imag - r, c.imag + r)

    def to_json(self):
        c = complex(self.center)
        return {"type": "disk", "center": [c.real, c.imag], "radius": self.radius}


@dataclass(frozen=True)
class DiskComplement(OpenSet):
    """Complement of the closed disk (contains infinity)."""

    center: complex
    radius: float
    kind = "disk_complement"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def sdf(self, z):
        zf, inf = _finite(z)
        return np.where(inf, np.inf, np.abs(zf - self.center) - self.radius)

    def to_json(self):
        c = complex(self.center)
        return {"type": "disk_complement", "center": [c.real, c.imag], "radius": self.radius}


@dataclass(frozen=True)
class Annulus(OpenSet):
    r_in: float
    r_out: float
    center: complex = 0j
    kind = "annulus"

    def __post_init__(self):
        if not 0 <= self.r_in < self.r_out:
            raise ValueError("annulus needs 0 <= r_in < r_out")

    def sdf(self, z):
        zf, inf = _finite(z)
        a = np.abs(zf - self.center)
        return np.where(inf, -np.inf, np.minimum(a - self.r_in, self.r_out - a))

    def bbox(self):
        c, r = complex(self.center), self.r_out
        return (c.real - r, c.real + r, c.imag - r, c.imag + r)

    def to_json(self):
        c = complex(self.center)
        return {"type": "annulus", "r_in": self.r_in, "r_out": self.r_out, "center": [c.real, c.imag]}


@dataclass(frozen=True)
class HalfPlane(OpenSet):
    """{z : Re((z - point) * conj(normal)) > 0}, ``normal`` pointing inside."""

    point: complex
    normal: complex
    kind = "half_plane"

    def __post_init__(self):
        if abs(self.normal) == 0:
            raise ValueError("half-plane normal must be nonzero")

    def sdf(self, z):
        zf, inf = _finite(z)
        n = complex(self.normal) / abs(self.normal)
        return np.where(inf, 0.0, ((zf - self.point) * np.conj(n)).real)

    def to_json(self):
        p, n = complex(self.point), complex(self.normal)
        return {"type": "half_plane", "point": [p.real, p.imag], "normal": [n.real, n.imag]}


@dataclass(frozen=True)
class Polygon(OpenSet):
    """Interior of a simple polygon."""

    vertices: tuple
    kind = "polygon"

    def __post_init__(self):
        v = tuple(complex(p) for p in self.vertices)
        if len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", v)
        if abs(self._area()) < 1e-15:
            raise ValueError("degenerate polygon")

    def _area(self):
        v = np.array(self.vertices)
        return 0.5 * float(np.sum(v.real * np.roll(v.imag, -1) - np.roll(v.real, -1) * v.imag))

    def sdf(self, z):
        zf, inf = _finite(z)
        zf = np.atleast_1d(zf)
        v = np.array(self.vertices)
        a, b = v, np.roll(v, -1)
        ab = b - a
        # distance to each edge
        t = np.clip(((zf[..., None] - a) * np.conj(ab)).real / np.abs(ab) ** 2, 0, 1)
        dist = np.min(np.abs(zf[..., None] - (a + t * ab)), axis=-1)
        # even-odd rule
        ya, yb = a.imag, b.imag
        cond = (ya <= zf.imag[..., None]) != (yb <= zf.imag[..., None])
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = a.real + (zf.imag[..., None] - ya) * (b.real - a.real) / (yb - ya)
        inside = (np.sum(cond & (zf.real[..., None] < xcross), axis=-1) % 2) == 1
        out = np.where(inside, dist, -dist)
        out = np.where(np.atleast_1d(inf), -np.inf, out)
        return out if np.ndim(z) else out[0]

    def bbox(self):
        v = np.array(self.vertices)
        return (v.real.min(), v.real.max(), v.imag.min(), v.imag.max())

    def to_json(self):
        return {"type": "polygon", "vertices": [[p.real, p.imag] for p in self.vertices]}


@dataclass(frozen=True)
class Union(OpenSet):
    parts: tuple
    kind = "union"

    def sdf(self, z):
        return np.max([p.sdf(z) for p in self.parts], axis=0)

    def bbox(self):
        boxes = [p.bbox() for p in self.parts]
        if any(b is None for b in boxes):
            return None
        b = np.array(boxes)
        return (b[:, 0].min(), b[:, 1].max(), b[:, 2].min(), b[:, 3].max())

    def to_json(self):
        return {"type": "union", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True)
class Intersection(OpenSet):
    parts: tuple
    kind = "intersection"

    def sdf(self, z):
        return np.min([p.sdf(z) for p in self.parts], axis=0)

    def bbox(self):
        boxes = [p.bbox() for p in self.parts if p.bbox() is not None]
        if not boxes:
            return None
        b = np.array(boxes)
        return (b[:, 0].max(), b[:, 1].min(), b[:, 2].max(), b[:, 3].min())

    def to_json(self):
        return {"type": "intersection", "parts": [p.to_json() for p in self.parts]}


def _c(pair):
    if len(pair) != 2:
        raise ValueError(f"expected [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


_OPEN_SET_KEYS = {
    "disk": {"center", "radius"},
    "disk_complement": {"center", "radius"},
    "annulus": {"r_in", "r_out", "center"},
    "half_plane": {"point", "normal"},
    "polygon": {"vertices"},
    "union": {"parts"},
    "intersection": {"parts"},
}


def open_set_from_json(obj: dict) -> OpenSet:
    kind = obj.get("type")
    if kind not in _OPEN_SET_KEYS:
        raise ValueError(f"unknown open set type {kind!r}")
    extra = set(obj) - _OPEN_SET_KEYS[kind] - {"type"}
    if extra:
        raise ValueError(f"unknown keys for {kind}: {sorted(extra)}")
    if kind == "disk":
        return Disk(_c(obj["center"]), float(obj["radius"]))
    if kind == "disk_complement":
        return DiskComplement(_c(obj["center"]), float(obj["radius"]))
    if kind == "annulus":
        return Annulus(float(obj["r_in"]), float(obj["r_out"]), _c(obj.get("center", [0.0, 0.0])))
    if kind == "half_plane":
        return HalfPlane(_c(obj["point"]), _c(obj["normal"]))
    if kind == "polygon":
        return Polygon(tuple(_c(p) for p in obj["vertices"]))
    parts = tuple(open_set_from_json(p) for p in obj["parts"])
    if not parts:
        raise ValueError(f"{kind} needs at least one part")
    return Union(parts) if kind == "union" else Intersection(parts)


def sample_open_set(U: OpenSet, count: int, rng) -> np.ndarray:
    """Uniform samples of U: from its planar bounding box when bounded, else sphere-uniform."""
    box = U.bbox()
    out = []
    have = 0
    for _ in range(200):
        if box is not None:
            x0, x1, y0, y1 = box
            z = rng.uniform(x0, x1, 4 * count) + 1j * rng.uniform(y0, y1, 4 * count)
        else:
            v = rng.normal(size=(4 * count, 3))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            with np.errstate(divide="ignore", invalid="ignore"):
                z = (v[:, 0] + 1j * v[:, 1]) / (1 - v[:, 2])
        z = z[U.contains(z)]
        out.append(z)
        have += z.size
        if have >= count:
            break
    pts = np.concatenate(out)[:count]
    if pts.size == 0:
        raise ValueError("open set appears empty: no samples accepted")
    return pts


def osc_check(gs: GeneratorSystem, U: OpenSet, density: int = 20000, rng_seed: int = 0, tol: float = 1e-9):
    """Sampled open set condition: f_j^{-1}(U) in U and pairwise disjoint preimages.

    Containment: every preimage of every sample lies in U up to ``tol``.
    Disjointness: a point y of f_j^{-1}(U) lies in f_k^{-1}(U) iff f_k(y) is in
    U, which is decided exactly by forward evaluation.
    """
    rng = np.random.default_rng(rng_seed)
    u = sample_open_set(U, density, rng)
    pre = [f.preimage_array(u, gs.tol).ravel() for f in gs.gens]
    worst_containment = min(float(np.min(U.sdf(y))) for y in pre)
    containment_ok = worst_containment >= -tol
    pairs = []
    for j, k in itertools.permutations(range(gs.m), 2):
        depth_in = U.sdf(gs.gens[k](pre[j], gs.tol))
        hits = int(np.sum(depth_in > tol))
        pairs.append(
            {"j": j + 1, "k": k + 1, "violations": hits, "max_depth": float(np.max(depth_in))}
        )
    disjoint_ok = all(p["violations"] == 0 for p in pairs)
    return {
        "verdict": "pass" if containment_ok and disjoint_ok else "fail",
        "containment_ok": bool(containment_ok),
        "worst_containment_margin": worst_containment,
        "disjoint_ok": bool(disjoint_ok),
        "pairs": pairs,
        "samples": int(u.size),
        "open_set": U.to_json(),
        "rng_seed": rng_seed,
    }
