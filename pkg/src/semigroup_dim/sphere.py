"""Riemann-sphere numerics.

Points of the sphere are plain Python/numpy complex numbers; the point at
infinity is any non-finite value (or a finite value beyond the overflow
bound), canonically ``INF``.  Rational maps are evaluated in whichever chart
(``z`` or ``1/z``) keeps the argument inside the closed unit disk, which keeps
every polynomial evaluation bounded by the coefficient norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

INF = complex(np.inf, 0.0)


@dataclass(frozen=True)
class NumericTolerances:
    """Numeric limits shared by every solver in the package."""

    root_residual: float = 1e-12
    newton_max_iter: int = 200
    deriv_floor: float = 1e-14
    overflow: float = 1e150

    def __post_init__(self):
        for name in ("root_residual", "newton_max_iter", "deriv_floor", "overflow"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be strictly positive")


DEFAULT_TOL = NumericTolerances()


class RootSolverError(RuntimeError):
    """Raised when the simultaneous root iteration fails to converge."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


def is_infinite(z, overflow=DEFAULT_TOL.overflow):
    z = np.asarray(z)
    with np.errstate(invalid="ignore", over="ignore"):
        return ~np.isfinite(z) | (np.abs(z) > overflow)


def normalize(z, overflow=DEFAULT_TOL.overflow):
    """Collapse huge or non-finite values onto ``INF``."""
    z = np.asarray(z, dtype=complex)
    return np.where(is_infinite(z, overflow), INF, z)


def to_sphere(z):
    """Stereographic embedding onto the unit sphere in R^3 (infinity -> north pole)."""
    z = np.asarray(z, dtype=complex)
    inf = is_infinite(z)
    zf = np.where(inf, 0.0, z)
    s = 1.0 + np.abs(zf) ** 2
    out = np.stack([2 * zf.real / s, 2 * zf.imag / s, (s - 2.0) / s], axis=-1)
    out[inf] = (0.0, 0.0, 1.0)
    return out


def chordal_distance(z, w):
    """Chordal distance on the sphere of diameter 2.

    d(z, w) = 2|z - w| / sqrt((1 + |z|^2)(1 + |w|^2)),  d(z, inf) = 2 / sqrt(1 + |z|^2).
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    zi, wi = is_infinite(z), is_infinite(w)
    zf = np.where(zi, 0.0, z)
    wf = np.where(wi, 0.0, w)
    both = 2 * np.abs(zf - wf) / np.sqrt((1 + np.abs(zf) ** 2) * (1 + np.abs(wf) ** 2))
    only_z = 2 / np.sqrt(1 + np.abs(wf) ** 2)
    only_w = 2 / np.sqrt(1 + np.abs(zf) ** 2)
    d = np.where(zi & wi, 0.0, np.where(zi, only_z, np.where(wi, only_w, both)))
    return d if d.ndim else float(d)


def _polyval(c, z):
    """Horner evaluation; ``c`` ascending, broadcasts over ``z``."""
    out = np.zeros(np.shape(z), dtype=complex) + c[-1]
    for a in c[-2::-1]:
        out = out * z + a
    return out


def _polyval_batch(C, z):
    """Evaluate row-wise polynomials ``C`` (N, k+1) at points ``z`` (N, d)."""
    p = np.zeros(z.shape, dtype=complex) + C[:, -1:]
    dp = np.zeros(z.shape, dtype=complex)
    for k in range(C.shape[1] - 2, -1, -1):
        dp = dp * z + p
        p = p * z + C[:, k : k + 1]
    return p, dp


def _trim(c, rel=0.0):
    c = np.asarray(c, dtype=complex).ravel()
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    scale = np.max(np.abs(c))
    k = c.size
    while k > 1 and abs(c[k - 1]) <= rel * scale:
        k -= 1
    return c[:k]


def _backward_scale(cmax, z, d):
    """max|c| * sum_k |z|^k: normwise backward-error denominator."""
    a = np.abs(z)
    with np.errstate(over="ignore", invalid="ignore"):
        geo = np.where(np.abs(a - 1) < 1e-8, d + 1.0, (a ** (d + 1) - 1) / (a - 1))
    return np.maximum(cmax[:, None] * geo, 1e-300)


def _aberth(C, tol):
    """Simultaneous Aberth-Ehrlich iteration for rows of ``C`` (leading coeff nonzero).

    Initial guesses sit on the circle of radius ``max_k |c_k / c_d|^(1/(d-k))``
    (the Fujiwara bound without its factor 2) at equally spaced,
    deterministically rotated angles.  Rows are frozen as soon as they
    converge, so every row's result depends only on that row.
    """
    N, k1 = C.shape
    d = k1 - 1
    c = C / C[:, -1:]
    if d == 1:
        return -c[:, :1]
    expo = 1.0 / (d - np.arange(d))
    radius = np.max(np.abs(c[:, :-1]) ** expo, axis=1)
    radius = np.where(radius > 0, radius, 1.0)
    angles = 2 * np.pi * np.arange(d) / d + 0.4
    z = radius[:, None] * np.exp(1j * angles)[None, :]
    cmax = np.max(np.abs(c), axis=1)
    active = np.arange(N)
    eps = np.finfo(float).eps
    for _ in range(tol.newton_max_iter):
        if active.size == 0:
            break
        za = z[active]
        p, dp = _polyval_batch(c[active], za)
        res = np.abs(p) / _backward_scale(cmax[active], za, d)
        at_noise = np.all(res <= 2 * eps, axis=1)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = p / dp
            repel = np.zeros_like(za)
            for shift in range(1, d):
                repel += 1.0 / (za - np.roll(za, shift, axis=1))
            step = ratio / (1.0 - ratio * repel)
        step = np.where(np.isfinite(step), step, 0.0)
        # dp == 0 away from a root: nudge instead of stalling
        step = np.where((dp == 0) & (p != 0), 1e-3 * (1 + np.abs(za)), step)
        step[at_noise] = 0.0
        z[active] = za - step
        small = np.all(np.abs(step) <= 4 * eps * (1 + np.abs(za)), axis=1)
        active = active[~(at_noise | small)]
    p, _ = _polyval_batch(c, z)
    res = np.abs(p) / _backward_scale(cmax, z, d)
    worst = float(np.max(res)) if res.size else 0.0
    if not np.all(np.isfinite(z)) or worst > tol.root_residual:
        raise RootSolverError(
            f"root iteration did not converge (worst backward residual {worst:.3e})",
            residual=worst,
        )
    return z


def poly_roots_batch(C, degree, tol=DEFAULT_TOL):
    """Projective roots of row polynomials ``C`` (N, degree+1), ascending.

    Rows whose leading coefficients vanish have roots at infinity with the
    complementary multiplicity, so each row always yields ``degree`` values.
    """
    C = np.asarray(C, dtype=complex)
    N = C.shape[0]
    out = np.full((N, degree), INF, dtype=complex)
    if N == 0:
        return out
    absC = np.abs(C)
    scale = absC.max(axis=1)
    eff = np.full(N, 0)
    for k in range(degree, -1, -1):
        live = (eff == 0) & (absC[:, k] > 1e-15 * scale)
        eff[live] = k
    for k in np.unique(eff):
        if k == 0:
            continue
        rows = np.nonzero(eff == k)[0]
        out[rows, :k] = _aberth(C[rows, : k + 1], tol)
    return normalize(out, tol.overflow)


def poly_roots(coeffs, degree=None, tol=DEFAULT_TOL):
    """Roots of one polynomial (ascending coefficients), padded with ``INF`` up to ``degree``."""
    c = np.asarray(coeffs, dtype=complex).ravel()
    if degree is None:
        degree = _trim(c).size - 1
    if c.size < degree + 1:
        c = np.concatenate([c, np.zeros(degree + 1 - c.size, dtype=complex)])
    return poly_roots_batch(c[None, :], degree, tol)[0]


def cluster_points(points, radius=1e-7):
    """Group sphere points within ``radius`` chordal distance.

    Returns a list of ``(representative, multiplicity)`` in first-seen order.
    """
    pts = list(np.asarray(points, dtype=complex).ravel())
    used = [False] * len(pts)
    groups = []
    for i, p in enumerate(pts):
        if used[i]:
            continue
        members = [p]
        used[i] = True
        for j in range(i + 1, len(pts)):
            if not used[j] and chordal_distance(p, pts[j]) < radius:
                members.append(pts[j])
                used[j] = True
        if is_infinite(members[0]):
            rep = INF
        else:
            rep = complex(np.mean(members))
        groups.append((rep, len(members)))
    return groups


def _as_coeffs(c):
    arr = np.asarray(c, dtype=complex).ravel()
    return tuple(complex(v) for v in arr)


@dataclass(frozen=True)
class RationalMap:
    """Rational map ``num(z) / den(z)`` with ascending complex coefficient lists."""

    num: tuple
    den: tuple = (1 + 0j,)
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        num = _trim(self.num)
        den = _trim(self.den)
        if np.all(num == 0):
            raise ValueError("numerator vanishes identically: constant map")
        if np.all(den == 0):
            raise ValueError("denominator vanishes identically")
        object.__setattr__(self, "num", _as_coeffs(num))
        object.__setattr__(self, "den", _as_coeffs(den))
        if self.degree < 1:
            raise ValueError("constant maps are not allowed")
        self._check_reduced()

    @classmethod
    def polynomial(cls, coeffs):
        return cls(tuple(coeffs), (1.0,))

    @classmethod
    def affine(cls, a, b):
        """z -> a z + b."""
        return cls((b, a), (1.0,))

    @property
    def degree(self):
        return max(len(self.num), len(self.den)) - 1

    @property
    def is_polynomial(self):
        return len(self.den) == 1

    def _arrays(self):
        if "num" not in self._cache:
            d = self.degree
            num = np.zeros(d + 1, dtype=complex)
            den = np.zeros(d + 1, dtype=complex)
            num[: len(self.num)] = self.num
            den[: len(self.den)] = self.den
            self._cache["num"] = num
            self._cache["den"] = den
            self._cache["num_rev"] = num[::-1].copy()
            self._cache["den_rev"] = den[::-1].copy()
            self._cache["scale"] = float(np.abs(num).sum() + np.abs(den).sum())
        c = self._cache
        return c["num"], c["den"], c["num_rev"], c["den_rev"], c["scale"]

    def _check_reduced(self, rho=1e-10):
        if len(self.num) == 1 or len(self.den) == 1:
            return
        num, den, *_ = self._arrays()
        roots = poly_roots(self.den)
        snum = np.abs(np.asarray(self.num))
        for r in roots:
            if is_infinite(r):
                continue
            z = r if abs(r) <= 1 else 1 / r
            p = _polyval(np.asarray(self.num) if abs(r) <= 1 else num[::-1], z)
            if abs(p) <= rho * snum.sum():
                raise ValueError("numerator and denominator share a root: map not in lowest terms")

    def _charts(self, z):
        """Split ``z`` into inner-chart values, returning (P, P', Q, Q', s) arrays."""
        num, den, num_rev, den_rev, _ = self._arrays()
        z = np.asarray(z, dtype=complex)
        inf = is_infinite(z)
        inner = ~inf & (np.abs(np.where(inf, 0, z)) <= 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(inner, z, np.where(inf, 0.0, 1.0 / np.where(inf | inner, 1.0, z)))
        P = np.where(inner, _polyval(num, s), _polyval(num_rev, s))
        Q = np.where(inner, _polyval(den, s), _polyval(den_rev, s))
        dnum = num[1:] * np.arange(1, num.size)
        dden = den[1:] * np.arange(1, den.size)
        dnum_r = num_rev[1:] * np.arange(1, num.size)
        dden_r = den_rev[1:] * np.arange(1, den.size)
        dP = np.where(inner, _polyval(dnum, s), _polyval(dnum_r, s))
        dQ = np.where(inner, _polyval(dden, s), _polyval(dden_r, s))
        return P, dP, Q, dQ, s

    def __call__(self, z, tol=DEFAULT_TOL):
        """Evaluate on the sphere (vectorized); poles map to ``INF``."""
        scalar = np.ndim(z) == 0
        P, _, Q, _, _ = self._charts(z)
        scale = self._arrays()[4]
        bad = (np.abs(P) + np.abs(Q)) <= 1e-14 * scale
        if np.any(bad):
            raise ValueError("0/0 indeterminacy: common root, map not reduced")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(Q == 0, INF, P / np.where(Q == 0, 1.0, Q))
        out = normalize(out, tol.overflow)
        return complex(out) if scalar else out

    def deriv_norm(self, z):
        """Spherical derivative norm |f'(z)| (1 + |z|^2) / (1 + |f(z)|^2), chart-free."""
        scalar = np.ndim(z) == 0
        P, dP, Q, dQ, s = self._charts(z)
        out = np.abs(dP * Q - P * dQ) * (1 + np.abs(s) ** 2) / (np.abs(P) ** 2 + np.abs(Q) ** 2)
        return float(out) if scalar else out

    def log_deriv_norm(self, z, floor=DEFAULT_TOL.deriv_floor):
        """log of :meth:`deriv_norm`, with ``-inf`` below ``floor``."""
        n = np.asarray(self.deriv_norm(z))
        with np.errstate(divide="ignore"):
            out = np.where(n < floor, -np.inf, np.log(np.maximum(n, 1e-300)))
        return float(out) if out.ndim == 0 else out

    def preimage_array(self, x, tol=DEFAULT_TOL):
        """All ``degree`` solutions of f(y) = x for each entry of ``x``.

        Returns an (N, degree) array; repeated roots appear repeatedly and
        infinity is ``INF``.
        """
        num, den, *_ = self._arrays()
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        inf = is_infinite(x, tol.overflow)
        inner = ~inf & (np.abs(np.where(inf, 0, x)) <= 1.0)
        C = np.empty((x.size, self.degree + 1), dtype=complex)
        C[inner] = num[None, :] - x[inner, None] * den[None, :]
        outer = ~inner
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(inf[outer], 0.0, 1.0 / np.where(inf[outer], 1.0, x[outer]))
        C[outer] = den[None, :] - u[:, None] * num[None, :]
        return poly_roots_batch(C, self.degree, tol)

    def preimages(self, x, tol=DEFAULT_TOL, cluster=1e-7):
        """Solutions of f(y) = x as ``[(y, multiplicity), ...]``; multiplicities sum to the degree."""
        roots = self.preimage_array(np.asarray([x]), tol)[0]
        return cluster_points(roots, cluster)

    def compose(self, inner):
        """Symbolic composition ``self o inner``."""
        d = self.degree
        num, den, *_ = self._arrays()
        A = np.asarray(inner.num)
        B = np.asarray(inner.den)
        P = np.polynomial.polynomial
        pows_a = [np.ones(1, dtype=complex)]
        pows_b = [np.ones(1, dtype=complex)]
        for _ in range(d):
            pows_a.append(P.polymul(pows_a[-1], A))
            pows_b.append(P.polymul(pows_b[-1], B))
        out_n = np.zeros(1, dtype=complex)
        out_d = np.zeros(1, dtype=complex)
        for k in range(d + 1):
            term = P.polymul(pows_a[k], pows_b[d - k])
            if num[k] != 0:
                out_n = P.polyadd(out_n, num[k] * term)
            if den[k] != 0:
                out_d = P.polyadd(out_d, den[k] * term)
        # terms past the known degree can only be rounding noise; relative trimming
        # would wrongly drop a small leading coefficient when the constant term is huge
        top = d * inner.degree + 1
        return RationalMap(tuple(_trim(out_n[:top])), tuple(_trim(out_d[:top])))

    def critical_points(self, tol=DEFAULT_TOL):
        """Critical points counted projectively (2d - 2 of them with multiplicity)."""
        num, den, *_ = self._arrays()
        P = np.polynomial.polynomial
        w = P.polysub(P.polymul(P.polyder(num), den), P.polymul(num, P.polyder(den)))
        total = 2 * self.degree - 2
        if total == 0:
            return np.zeros(0, dtype=complex)
        return poly_roots(np.asarray(w), degree=total, tol=tol)

    def to_json(self):
        return {
            "num": [[c.real, c.imag] for c in self.num],
            "den": [[c.real, c.imag] for c in self.den],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RationalMap":
        def parse(seq: Sequence) -> tuple:
            out = []
            for pair in seq:
                if len(pair) != 2:
                    raise ValueError(f"coefficient must be [re, im], got {pair!r}")
                out.append(complex(float(pair[0]), float(pair[1])))
            return tuple(out)

        extra = set(obj) - {"num", "den"}
        if extra:
            raise ValueError(f"unknown generator keys: {sorted(extra)}")
        return cls(parse(obj["num"]), parse(obj.get("den", [[1.0, 0.0]])))
