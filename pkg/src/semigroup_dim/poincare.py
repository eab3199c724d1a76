"""Truncated Poincare series and critical exponents.

a_n(t) is the depth-n slice of T(t, x): the sum over all words of length n and
all their preimages y of x of ||(f_w)'(y)||^(-t).  It equals (N_t^n 1)(x), so
it is read off the same cached trees as the pressure estimator.  The critical
exponent is where the growth rate of a_n(t) in n changes sign.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .checks import base_point_clearance
from .semigroup import GeneratorSystem
from .sphere import chordal_distance, is_infinite
from .thermo import _cached_tree, default_depth, level_log_sums

log = logging.getLogger(__name__)


class BasePointError(ValueError):
    pass


def poincare_levels(gs: GeneratorSystem, x, t: float, N: int, threads=1) -> np.ndarray:
    """log a_1(t), ..., log a_N(t) at base point ``x``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return level_log_sums(_cached_tree(gs, complex(x), N, threads), t)


@dataclass
class SeriesScan:
    x: complex
    t_grid: np.ndarray
    levels: np.ndarray  # (len(t_grid), N) array of log a_n(t)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        if np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be increasing")

    @property
    def N(self):
        return self.levels.shape[1]

    def rows(self):
        """(t, n, log a_n) triples in scan order."""
        for t, row in zip(self.t_grid, self.levels):
            for n, v in enumerate(row, start=1):
                yield float(t), n, float(v)

    def write_csv(self, path, comments=()):
        with open(path, "w", newline="\n") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            fh.write("t,n,log_a\n")
            for t, n, v in self.rows():
                fh.write(f"{float(t)!r},{n},{float(v)!r}\n")


def scan_series(gs: GeneratorSystem, x, t_grid, N: int, threads=1) -> SeriesScan:
    t_grid = np.asarray(t_grid, dtype=float)
    levels = np.array([poincare_levels(gs, x, t, N, threads) for t in t_grid])
    return SeriesScan(complex(x), t_grid, levels)


def growth_rate(log_a, n_from: Optional[int] = None) -> float:
    """Least-squares slope of log a_n against n over n >= n_from (default: second half)."""
    log_a = np.asarray(log_a, dtype=float)
    N = log_a.size
    n_from = max(2, (N + 1) // 2) if n_from is None else n_from
    n = np.arange(1, N + 1)
    use = (n >= n_from) & np.isfinite(log_a)
    if use.sum() < 3:
        raise ValueError("growth-rate fit needs at least 3 usable levels")
    return float(np.polyfit(n[use], log_a[use], 1)[0])


def critical_exponent(
    gs: GeneratorSystem,
    x,
    t_lo: float = 0.0,
    t_hi: float = 4.0,
    N: Optional[int] = None,
    tol: float = 1e-8,
    clearance: float = 1e-3,
    threads: int = 1,
) -> float:
    """The t where the growth rate of a_n(t) crosses zero, by bisection.

    ``x`` must stay at least ``clearance`` (chordal) from the approximated
    attracting and postcritical sets; closer base points raise
    :class:`BasePointError`.
    """
    x = complex(x)
    if is_infinite(x):
        raise BasePointError("base point at infinity")
    gap = base_point_clearance(gs, x)
    if gap < clearance:
        raise BasePointError(f"base point within {gap:.2e} of the attracting/postcritical approximation")
    N = default_depth(gs) + 1 if N is None else N
    if N < 4:
        raise ValueError("growth-rate fit needs at least 3 usable levels")
    tree = _cached_tree(gs, x, N, threads)

    def g(t):
        return growth_rate(level_log_sums(tree, t))

    lo, hi = t_lo, t_hi
    glo, ghi = g(lo), g(hi)
    if not glo > 0 > ghi:
        raise ValueError(f"growth rate does not change sign on [{t_lo}, {t_hi}]: {glo:.3g}, {ghi:.3g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def word_coincidences(gs: GeneratorSystem, max_len: int = 3, n_points: int = 20, rng_seed: int = 0, rtol=1e-9):
    """Pairs of distinct words (length <= ``max_len``) whose maps agree at ``n_points`` random points.

    Coincident words make the semigroup series S over-count relative to the
    word series T; a warning is emitted when any are found.
    """
    rng = np.random.default_rng(rng_seed)
    pts = rng.normal(size=n_points) + 1j * rng.normal(size=n_points)
    words, values = [], []
    frontier = [((), pts)]
    for _ in range(max_len):
        nxt = []
        for w, v in frontier:
            for j in range(1, gs.m + 1):
                nv = gs[j](v, gs.tol)
                nxt.append((w + (j,), nv))
        words += [w for w, _ in nxt]
        values += [v for _, v in nxt]
        frontier = nxt
    pairs = []
    for a in range(len(words)):
        for b in range(a + 1, len(words)):
            if np.all(chordal_distance(values[a], values[b]) <= rtol):
                pairs.append((words[a], words[b]))
    if pairs:
        msg = f"{len(pairs)} coincident word pair(s), e.g. {pairs[0]}; S(s, x) < T(s, x) possible"
        warnings.warn(msg, stacklevel=2)
        log.warning(msg)
    return pairs
