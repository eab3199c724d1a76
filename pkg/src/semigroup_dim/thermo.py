"""Transfer operators, pressure estimation and the Bowen zero.

For a base point x of the Julia set, the level sums

    a_n(t) = sum over depth-n tree nodes (u, y) of ||(f_u)'(y)||^(-t) = (N_t^n 1)(x)

grow like alpha(x) * exp(n P(t)).  The pressure estimator is the ratio of two
consecutive levels, log(a_{n+1} / a_n), which cancels the eigenfunction
prefactor alpha(x).  All sums are accumulated in log space.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .semigroup import GeneratorSystem, PreimageTree, preimage_tree
from .julia import find_seed

log = logging.getLogger(__name__)

DEFAULT_DEPTH = 10
NODE_BUDGET = 2_000_000
# floor for reported depth errors: root-solver noise on log norms
NOISE_FLOOR = 1e-9


class CriticalPointError(ValueError):
    pass


class DegenerateSystemError(RuntimeError):
    pass


def default_depth(gs: GeneratorSystem, budget=NODE_BUDGET, cap=DEFAULT_DEPTH):
    """Largest n <= cap such that the depth-(n+1) tree stays within ``budget`` nodes."""
    S = gs.total_degree
    if S <= 1:
        return cap
    fit = int(math.floor(math.log(budget) / math.log(S))) - 1
    return max(2, min(cap, fit))


def default_base_point(gs: GeneratorSystem):
    return find_seed(gs)[0]


def phi_tilde(gs: GeneratorSystem, j: int, x) -> float:
    """-log ||f_j'(x)||; raises at (numerically) critical points."""
    n = gs[j].deriv_norm(x)
    if n < gs.tol.deriv_floor:
        raise CriticalPointError("critical point encountered on Julia approximation")
    return -math.log(n)


def transfer_apply(gs: GeneratorSystem, t: float, psi: Callable, points) -> np.ndarray:
    """(N_t psi)(z) = sum_j sum_{f_j(y) = z} ||f_j'(y)||^(-t) psi(y) at each point.

    ``psi`` is a vectorized callback evaluated on arrays of preimage points.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    out = np.zeros(pts.size)
    for f in gs.gens:
        ys = f.preimage_array(pts, gs.tol)
        w = np.exp(-t * f.log_deriv_norm(ys, gs.tol.deriv_floor))
        vals = np.asarray(psi(ys.ravel()), dtype=float).reshape(ys.shape)
        out += (w * vals).sum(axis=1)
    return out


def segment_logsumexp(values, parent, n_parents):
    """log sum exp of ``values`` grouped by ``parent`` index (empty groups -> -inf)."""
    mx = np.full(n_parents, -np.inf)
    np.maximum.at(mx, parent, values)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(under="ignore"):
        s = np.bincount(parent, weights=np.exp(values - safe[parent]), minlength=n_parents)
    with np.errstate(divide="ignore"):
        return np.where(s > 0, safe + np.log(s), -np.inf)


def level_log_sums(tree: PreimageTree, t: float) -> np.ndarray:
    """log a_k(t) for k = 1..depth via skew-product enumeration (single root)."""
    return np.array([logsumexp(-t * L) for L in tree.log_norm])


def operator_log_sums(tree: PreimageTree, t: float, k: Optional[int] = None) -> float:
    """log (N_t^k 1)(x) by iterating the base operator up the tree.

    Each level's value is the weighted sum of its children's values, as in
    (N_t psi)(z) = sum ||f_j'(y)||^(-t) psi(y).  Independent of
    :func:`level_log_sums`, which sums chain-rule products directly.
    """
    k = tree.depth if k is None else k
    vals = np.zeros(tree.level_size(k))
    for lev in range(k, 0, -1):
        n_par = tree.level_size(lev - 1) if lev > 1 else tree.roots.size
        vals = segment_logsumexp(-t * tree.step[lev - 1] + vals, tree.parent[lev - 1], n_par)
    return float(vals[0])


@lru_cache(maxsize=8)
def _cached_tree(gs, x, depth, threads=1):
    return preimage_tree(gs, x, depth, threads=threads)


@dataclass
class PressureEstimator:
    """Pressure estimates from one cached depth-(n+1) tree rooted at ``x``."""

    gs: GeneratorSystem
    x: complex
    n: int
    tree: PreimageTree = field(repr=False, default=None)
    threads: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("pressure depth must be >= 2")
        if self.tree is None:
            self.tree = _cached_tree(self.gs, complex(self.x), self.n + 1, self.threads)

    def log_sums(self, t):
        return level_log_sums(self.tree, t)

    def at_depth(self, t, n):
        """Ratio estimate log(a_{n+1} / a_n) for any n <= self.n."""
        a = self.log_sums(t)
        return float(a[n] - a[n - 1])

    def __call__(self, t):
        return self.at_depth(t, self.n)

    def extrapolated(self, t):
        """Aitken delta-squared acceleration over depths n-2, n-1, n."""
        a = self.log_sums(t)
        p = [a[k] - a[k - 1] for k in (self.n - 2, self.n - 1, self.n)] if self.n >= 3 else []
        if len(p) < 3:
            return float(a[self.n] - a[self.n - 1])
        d1, d2 = p[1] - p[0], p[2] - p[1]
        if abs(d2 - d1) < 1e-14 or abs(d2) >= abs(d1):
            return float(p[2])
        return float(p[2] - d2 * d2 / (d2 - d1))


def pressure(gs: GeneratorSystem, t: float, x=None, n: Optional[int] = None, threads=1) -> float:
    """P(t) ~ log((N_t^{n+1} 1)(x) / (N_t^n 1)(x))."""
    x = default_base_point(gs) if x is None else x
    n = default_depth(gs) if n is None else n
    return PressureEstimator(gs, x, n, threads=threads)(t)


@dataclass
class PressureCurve:
    samples: list  # (t, P, n_used, base_point, extrapolated_P)

    def __post_init__(self):
        ts = [s[0] for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("t values must be strictly increasing")

    @property
    def t(self):
        return np.array([s[0] for s in self.samples])

    @property
    def P(self):
        return np.array([s[1] for s in self.samples])


def pressure_curve(gs, t_grid, x=None, n=None, threads=1) -> PressureCurve:
    x = default_base_point(gs) if x is None else x
    n = default_depth(gs) if n is None else n
    est = PressureEstimator(gs, x, n, threads=threads)
    return PressureCurve([(float(t), est(t), n, complex(x), est.extrapolated(t)) for t in t_grid])


@dataclass
class DimensionResult:
    delta: float
    bracket: tuple
    P_residual: float
    upper_bound: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "delta": self.delta,
            "bracket": list(self.bracket),
            "P_residual": self.P_residual,
            "upper_bound": self.upper_bound if math.isfinite(self.upper_bound) else None,
            "diagnostics": self.diagnostics,
        }


def _zero(P, lo, hi, tol, max_iter=200):
    """Bisection on a decreasing function, then one secant step inside the bracket."""
    plo, phi = P(lo), P(hi)
    mid, pm = lo, plo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        pm = P(mid)
        if abs(pm) <= tol or hi - lo < 1e-14:
            break
        if pm > 0:
            lo, plo = mid, pm
        else:
            hi, phi = mid, pm
    if plo > 0 > phi:
        sec = lo - plo * (hi - lo) / (phi - plo)
        ps = P(sec)
        if lo <= sec <= hi and abs(ps) < abs(pm):
            mid, pm = sec, ps
    return mid, pm, (lo, hi)


def bowen_dimension(
    gs: GeneratorSystem,
    x=None,
    n: Optional[int] = None,
    tol: float = 1e-10,
    t_hi: Optional[float] = None,
    expansion=None,
    threads: int = 1,
) -> DimensionResult:
    """The zero delta of the pressure estimator (Bowen's formula).

    The upper end of the bracket is ``log(total degree) / log(lambda) + 0.5``
    from ``expansion`` (a :class:`checks.ExpansionEstimate`) when given,
    otherwise ``t_hi`` or a doubling search.  The result records the zero at
    depths n-1 and n, their difference as the depth error, and the zero of the
    Aitken-extrapolated pressure.
    """
    x = default_base_point(gs) if x is None else complex(x)
    n = default_depth(gs) if n is None else n
    est = PressureEstimator(gs, x, n, threads=threads)
    p0 = est(0.0)
    if not p0 > 0:
        raise DegenerateSystemError(f"P(0) = {p0:.3g} <= 0 at the working depth")
    logS = math.log(gs.total_degree)
    lam = None
    if expansion is not None and expansion.lam > 1:
        lam = expansion.lam
    upper = logS / math.log(lam) if lam else math.inf
    if t_hi is None:
        t_hi = upper + 0.5 if lam else 4.0
    hi0 = t_hi
    while est(t_hi) >= 0:
        if t_hi >= 3 * hi0:
            raise DegenerateSystemError(f"no sign change of P on [0, {t_hi:.3g}]")
        t_hi = min(1.5 * t_hi, 3 * hi0)
    delta, res, bracket = _zero(est, 0.0, t_hi, tol)
    prev, _, _ = _zero(lambda t: est.at_depth(t, n - 1), 0.0, t_hi, tol)
    extra, _, _ = _zero(est.extrapolated, 0.0, t_hi, tol) if est.extrapolated(t_hi) < 0 else (delta, 0, 0)
    depth_error = abs(delta - prev) + NOISE_FLOOR
    diag = {
        "depth": n,
        "base_point": [x.real, x.imag],
        "delta_prev_depth": prev,
        "delta_extrapolated": extra,
        "depth_error": depth_error,
        "P0": p0,
        "t_hi": t_hi,
        "lambda": lam,
        "tree_nodes": int(sum(a.size for a in est.tree.points)),
    }
    log.info("delta=%.8f depth=%d err=%.2e", delta, n, depth_error)
    return DimensionResult(float(delta), bracket, float(res), upper, diag)


def _weighted_mean_log_norm(L, t):
    logw = -t * L
    w = np.exp(logw - logw.max())
    return float(np.sum(w * L) / np.sum(w))


def entropy_lyapunov(gs: GeneratorSystem, delta: float, x=None, n: Optional[int] = None, threads=1):
    """(Lyapunov exponent, entropy) at exponent ``delta``.

    Lambda is the growth per level of the delta-weighted mean log norm,
    E_{n+1}[log_norm] - E_n[log_norm], i.e. minus the t-derivative of the
    two-level pressure estimator at ``delta``.  h = delta * Lambda.
    """
    x = default_base_point(gs) if x is None else complex(x)
    n = default_depth(gs) if n is None else n
    tree = _cached_tree(gs, x, n + 1, threads)
    e_next = _weighted_mean_log_norm(tree.log_norm[n], delta)
    e_here = _weighted_mean_log_norm(tree.log_norm[n - 1], delta)
    lyap = e_next - e_here
    return lyap, delta * lyap
