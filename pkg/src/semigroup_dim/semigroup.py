"""Generator systems, words and skew-product preimage trees.

Word convention (used everywhere in the package): a word ``u = (u_1, ..., u_n)``
with symbols in ``1..m`` is read in *application order*, i.e. a node
``(u, y)`` of the depth-n tree rooted at ``x`` satisfies

    f_{u_n}( ... f_{u_2}( f_{u_1}(y) ) ... ) = x,

and its ``log_norm`` is ``log ||(f_{u_n} o ... o f_{u_1})'(y)||``.  Growing the
tree one level prepends a symbol: a child ``(j,) + u`` of node ``(u, y)`` is a
solution of ``f_j(y') = y``.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sphere import DEFAULT_TOL, NumericTolerances, RationalMap, RootSolverError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorSystem:
    """An ordered generator system f_1, ..., f_m of a rational semigroup."""

    gens: tuple
    name: str = ""
    tol: NumericTolerances = DEFAULT_TOL

    def __post_init__(self):
        gens = tuple(self.gens)
        if not gens:
            raise ValueError("a generator system needs at least one map")
        for g in gens:
            if not isinstance(g, RationalMap):
                raise TypeError(f"generators must be RationalMap, got {type(g).__name__}")
        object.__setattr__(self, "gens", gens)

    @property
    def m(self):
        return len(self.gens)

    @property
    def degrees(self):
        return tuple(g.degree for g in self.gens)

    @property
    def total_degree(self):
        return sum(self.degrees)

    def __len__(self):
        return len(self.gens)

    def __getitem__(self, j):
        """1-based access to generators, matching word symbols."""
        if not 1 <= j <= self.m:
            raise IndexError(f"symbol {j} outside 1..{self.m}")
        return self.gens[j - 1]


def _check_word(gs, word):
    word = tuple(int(s) for s in word)
    if not word:
        raise ValueError("empty word")
    for s in word:
        if not 1 <= s <= gs.m:
            raise ValueError(f"symbol {s} outside 1..{gs.m}")
    return word


def eval_word(gs: GeneratorSystem, word, y):
    """Apply f_{u_1}, then f_{u_2}, ...; return the endpoint and the summed log norms.

    The log norm is ``-inf`` as soon as an intermediate spherical derivative
    falls below the derivative floor.
    """
    word = _check_word(gs, word)
    z = complex(y)
    total = 0.0
    for s in word:
        f = gs[s]
        total += f.log_deriv_norm(z, gs.tol.deriv_floor)
        z = f(z, gs.tol)
    return z, total


@dataclass(frozen=True)
class PreimageNode:
    word: tuple
    point: complex
    log_norm: float


@dataclass
class PreimageTree:
    """All depth-1..n skew-product preimages of one or more root points.

    Level ``k`` (1-based, stored at index ``k - 1``) is laid out parent-major:
    the children of parent ``i`` occupy a contiguous block, ordered by
    generator and then by root index.  ``step`` holds the local term
    ``log ||f_j'(y)||`` and ``log_norm`` the accumulated chain-rule sum.
    """

    roots: np.ndarray
    points: list = field(default_factory=list)
    log_norm: list = field(default_factory=list)
    step: list = field(default_factory=list)
    symbol: list = field(default_factory=list)
    parent: list = field(default_factory=list)
    pruned: int = 0

    @property
    def depth(self):
        return len(self.points)

    def level_size(self, k):
        return self.points[k - 1].size

    def words(self, k):
        """(N_k, k) array of 1-based words for level ``k`` in application order."""
        out = np.empty((self.level_size(k), k), dtype=np.int16)
        idx = np.arange(self.level_size(k))
        for col, lev in enumerate(range(k, 0, -1)):
            out[:, col] = self.symbol[lev - 1][idx]
            idx = self.parent[lev - 1][idx]
        return out

    def root_index(self, k):
        """Index into ``roots`` of the root of every level-``k`` node."""
        idx = np.arange(self.level_size(k))
        for lev in range(k, 0, -1):
            idx = self.parent[lev - 1][idx]
        return idx

    def nodes(self, k=None):
        """Materialize level ``k`` (default: deepest) as :class:`PreimageNode` objects."""
        k = self.depth if k is None else k
        words = self.words(k)
        return [
            PreimageNode(tuple(int(s) for s in w), complex(p), float(L))
            for w, p, L in zip(words, self.points[k - 1], self.log_norm[k - 1])
        ]


def _grow_level(gs, points, log_norm, prune):
    """One backward step from ``points``; returns arrays in parent-major order."""
    S = gs.total_degree
    N = points.size
    kids = np.empty((N, S), dtype=complex)
    step = np.empty((N, S))
    sym = np.empty(S, dtype=np.int16)
    col = 0
    for j, f in enumerate(gs.gens, start=1):
        try:
            roots = f.preimage_array(points, gs.tol)
        except RootSolverError as exc:
            raise RootSolverError(f"preimages under generator {j}: {exc}", exc.residual) from exc
        d = f.degree
        kids[:, col : col + d] = roots
        step[:, col : col + d] = f.log_deriv_norm(roots, gs.tol.deriv_floor)
        sym[col : col + d] = j
        col += d
    new_log = log_norm[:, None] + step
    parent = np.repeat(np.arange(N), S)
    kids, step, new_log = kids.ravel(), step.ravel(), new_log.ravel()
    symbols = np.tile(sym, N)
    dropped = 0
    if prune is not None:
        t, floor = prune
        keep = -t * new_log >= floor
        dropped = int(keep.size - keep.sum())
        kids, step, new_log = kids[keep], step[keep], new_log[keep]
        symbols, parent = symbols[keep], parent[keep]
    return kids, new_log, step, symbols, parent, dropped


def _grow(gs, roots, depth, prune, lognorm=None):
    tree = PreimageTree(roots=roots)
    pts = roots
    lognorm = np.zeros(roots.size) if lognorm is None else lognorm
    for _ in range(depth):
        pts, lognorm, step, sym, par, dropped = _grow_level(gs, pts, lognorm, prune)
        tree.points.append(pts)
        tree.log_norm.append(lognorm)
        tree.step.append(step)
        tree.symbol.append(sym)
        tree.parent.append(par)
        tree.pruned += dropped
    return tree


def _merge(first, subs, roots):
    """Join per-branch subtrees (sub ``i`` rooted at level-1 node ``i``) in branch order."""
    out = PreimageTree(roots=roots)
    for name in ("points", "log_norm", "step", "symbol", "parent"):
        getattr(out, name).append(getattr(first, name)[0])
    for lev in range(subs[0].depth if subs else 0):
        if lev == 0:
            offsets = np.arange(len(subs))
        else:
            sizes = [s.points[lev - 1].size for s in subs]
            offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        for name in ("points", "log_norm", "step", "symbol"):
            getattr(out, name).append(np.concatenate([getattr(s, name)[lev] for s in subs]))
        out.parent.append(np.concatenate([s.parent[lev] + off for s, off in zip(subs, offsets)]))
    out.pruned = first.pruned + sum(s.pruned for s in subs)
    return out


def preimage_tree(
    gs: GeneratorSystem,
    x,
    depth: int,
    prune: Optional[tuple] = None,
    threads: int = 1,
) -> PreimageTree:
    """Depth-``depth`` backward tree of the skew product rooted at ``x``.

    ``x`` may be a single point or an array of roots.  ``prune=(t, floor)``
    drops subtrees whose weight ``exp(-t * log_norm)`` falls below
    ``exp(floor)``; this is an uncontrolled approximation and is recorded in
    ``tree.pruned``.  With ``threads > 1`` the first-level branches are grown
    concurrently and merged in branch order, so the output does not depend on
    the worker count.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    roots = np.atleast_1d(np.asarray(x, dtype=complex))
    if threads <= 1 or depth == 1:
        return _grow(gs, roots, depth, prune)
    first = _grow(gs, roots, 1, prune)
    lvl1 = first.points[0]
    lvl1_log = first.log_norm[0]

    def branch(i):
        return _grow(gs, lvl1[i : i + 1], depth - 1, prune, lvl1_log[i : i + 1])

    with ThreadPoolExecutor(max_workers=threads) as pool:
        subs = list(pool.map(branch, range(lvl1.size)))
    return _merge(first, subs, roots)


def blocked_system(gs: GeneratorSystem, n: int, degree_cap: int = 64) -> GeneratorSystem:
    """The generator system {f_u : |u| = n}, words in lexicographic order.

    ``f_u`` is ``f_{u_n} o ... o f_{u_1}`` (application order), built by
    symbolic composition.
    """
    if n < 1:
        raise ValueError("block length must be >= 1")
    maps = []
    for word in itertools.product(range(1, gs.m + 1), repeat=n):
        deg = int(np.prod([gs[s].degree for s in word]))
        if deg > degree_cap:
            raise ValueError(f"composed degree {deg} exceeds cap {degree_cap}")
        f = gs[word[0]]
        for s in word[1:]:
            f = gs[s].compose(f)
        maps.append(f)
    name = f"{gs.name}^{n}" if gs.name else ""
    return GeneratorSystem(tuple(maps), name=name, tol=gs.tol)
