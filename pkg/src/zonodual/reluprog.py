"""Solvers for ReLU programs ``min_{z in Z} c1.z + c2.relu(z)``.

Intervals and boxes are solved by candidate enumeration, 2-D zonotopes by
the vertex/axis-crossing candidate sets of ``geom2d``, and general
zonotopes by best-first enumeration of orthant sign patterns, each of which
turns the program into an LP over the generator coefficients.
"""

import heapq
import itertools
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geom import Hyperbox, Zonotope, concretize
from .geom2d import Zono2D, relu_candidates, relu_candidates_boxed
from .lpcore import LinearProgram, LPIterationLimit, solve_lp
from .netio import LayerSpec, NetworkSpec

TIE_TOL = 1e-12


@dataclass(frozen=True)
class ReluObjective:
    c1: np.ndarray
    c2: np.ndarray

    def __post_init__(self):
        c1 = np.atleast_1d(np.asarray(self.c1, dtype=float))
        c2 = np.atleast_1d(np.asarray(self.c2, dtype=float))
        if c1.shape != c2.shape:
            raise ValueError(f"c1 and c2 lengths differ ({c1.size} vs {c2.size})")
        if not (np.all(np.isfinite(c1)) and np.all(np.isfinite(c2))):
            raise ValueError("objective must be finite")
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return z @ self.c1 + np.maximum(z, 0.0) @ self.c2

    def sub(self, coords):
        return ReluObjective(self.c1[coords], self.c2[coords])


@dataclass
class ReluSolution:
    value: float
    argmin: Optional[np.ndarray]
    exact: bool


@dataclass(frozen=True)
class Budget:
    max_patterns: int = 2**20
    time_s: float = 10.0


def solve_interval(lo, hi, obj):
    c1, c2 = float(obj.c1[0]), float(obj.c2[0])
    cands = [lo, 0.0, hi] if lo < 0 < hi else [lo, hi]
    best, arg = np.inf, lo
    for z in cands:
        v = c1 * z + c2 * max(z, 0.0)
        if v < best:
            best, arg = v, z
    return ReluSolution(best, np.array([arg]), True)


def _interval_min(lo, hi, c1, c2):
    """Vectorized solve_interval: per-coordinate minima and minimizers."""
    cands = np.stack([lo, np.where((lo < 0) & (hi > 0), 0.0, lo), hi])
    vals = c1 * cands + c2 * np.maximum(cands, 0.0)
    idx = np.argmin(vals, axis=0)
    cols = np.arange(lo.size)
    return vals[idx, cols], cands[idx, cols]


def solve_box(h, obj):
    if h.dim != obj.c1.size:
        raise ValueError(f"box dimension {h.dim} != objective length {obj.c1.size}")
    vals, arg = _interval_min(h.lo, h.hi, obj.c1, obj.c2)
    return ReluSolution(float(vals.sum()), arg, True)


def solve_zono2d(z, obj, rect=None, cache=None):
    if not isinstance(z, Zono2D):
        z = Zono2D.from_zonotope(z)
    cands = cache
    if cands is None:
        cands = relu_candidates_boxed(z, rect) if rect is not None else relu_candidates(z)
    if cands.empty:
        # inconsistent rectangle: fall back to the zonotope alone (a superset)
        cands = relu_candidates(z)
    vals = obj(cands.points)
    i = int(np.argmin(vals))
    return ReluSolution(float(vals[i]), cands.points[i].copy(), True)


def _subsets_by_cost(deltas):
    """Yield (cost, subset) over all subsets of sorted nonnegative deltas, cheapest first."""
    n = len(deltas)
    yield 0.0, ()
    if n == 0:
        return
    counter = itertools.count()
    heap = [(deltas[0], next(counter), (0,))]
    while heap:
        cost, _, subset = heapq.heappop(heap)
        yield cost, subset
        last = subset[-1]
        if last + 1 < n:
            heapq.heappush(heap, (cost + deltas[last + 1], next(counter), subset + (last + 1,)))
            heapq.heappush(heap, (cost - deltas[last] + deltas[last + 1], next(counter), subset[:-1] + (last + 1,)))


def solve_zono_exact(z, obj, box=None, budget=None):
    """Exact ReLU program over a zonotope, optionally intersected with a box.

    Sign patterns of the unstable coordinates are visited in increasing
    order of their interval-relaxation bound; enumeration stops once that
    bound reaches the incumbent. When the budget runs out the returned value
    is the smaller of the incumbent and the bound of the first unvisited
    pattern, which is still a valid lower bound, and ``exact`` is False.
    """
    budget = budget or Budget()
    if z.dim != obj.c1.size:
        raise ValueError(f"zonotope dimension {z.dim} != objective length {obj.c1.size}")
    z = z.drop_zero_generators()
    if z.n_generators == 0:
        return ReluSolution(float(obj(z.center)), z.center.copy(), True)
    zbox = concretize(z)
    eff = zbox
    if box is not None:
        eff = zbox.intersect(box, tol=1e-9)
        if eff is None:
            eff, box = zbox, None
    sol = _orthant_search(z, obj, zbox, eff, budget)
    if sol is None and box is not None:
        sol = _orthant_search(z, obj, zbox, zbox, budget)
    if sol is None:
        # every pattern LP failed numerically; the interval relaxation is still sound
        return ReluSolution(solve_box(eff, obj).value, None, False)
    return sol


def _orthant_search(z, obj, zbox, eff, budget):
    c, E = z.center, z.generators
    c1, c2 = obj.c1, obj.c2
    lo, hi = eff.lo, eff.hi
    d, m = E.shape
    unstable = (lo < 0) & (hi > 0)
    active = (lo >= 0) & ~unstable  # relu is the identity here

    stable_vals, _ = _interval_min(lo, hi, c1 + np.where(active, c2, 0.0), np.zeros(d))
    base = float(stable_vals[~unstable].sum())
    u_idx = np.flatnonzero(unstable)
    v_plus = np.minimum(0.0, (c1 + c2)[u_idx] * hi[u_idx])
    v_minus = np.minimum(0.0, c1[u_idx] * lo[u_idx])
    prefer_plus = v_plus < v_minus
    base += float(np.minimum(v_plus, v_minus).sum())
    deltas = np.abs(v_plus - v_minus)
    order = np.argsort(deltas, kind="stable")
    sorted_deltas = deltas[order].tolist()

    # box rows that cut the zonotope's own interval hull
    box_rows, box_rhs = [], []
    for i in np.flatnonzero(eff.lo > zbox.lo + 1e-12):
        box_rows.append(E[i])
        box_rhs.append(eff.lo[i] - c[i])
    for i in np.flatnonzero(eff.hi < zbox.hi - 1e-12):
        box_rows.append(-E[i])
        box_rhs.append(c[i] - eff.hi[i])

    best_val, best_y = np.inf, None
    frontier = None
    unsolved = np.inf
    start = time.monotonic()
    visited = 0
    y_lo, y_hi = -np.ones(m), np.ones(m)
    for cost, flipped in _subsets_by_cost(sorted_deltas):
        bound = base + cost
        if bound >= best_val - TIE_TOL:
            break
        if visited >= budget.max_patterns or time.monotonic() - start > budget.time_s:
            frontier = bound
            break
        visited += 1
        plus = prefer_plus.copy()
        for k in flipped:
            plus[order[k]] = not plus[order[k]]
        signs = np.where(plus, 1.0, -1.0)
        on = active.copy()
        on[u_idx[plus]] = True
        a = c1 + np.where(on, c2, 0.0)
        rows = [signs[:, None] * E[u_idx]] if u_idx.size else []
        rhs = [-signs * c[u_idx]] if u_idx.size else []
        if box_rows:
            rows.append(np.array(box_rows))
            rhs.append(np.array(box_rhs))
        A = np.vstack(rows) if rows else np.zeros((0, m))
        r = np.concatenate(rhs) if rhs else np.zeros(0)
        try:
            res = solve_lp(LinearProgram(a @ E, y_lo, y_hi, A, r))
        except LPIterationLimit:
            unsolved = min(unsolved, bound)
            continue
        if not res.optimal:
            continue
        val = float(a @ c + res.value)
        if val < best_val - TIE_TOL or (abs(val - best_val) <= TIE_TOL and tuple(res.x) < tuple(best_y)):
            best_val, best_y = val, res.x
    if best_y is None and frontier is None and unsolved == np.inf:
        return None
    exact = frontier is None and unsolved == np.inf
    value = min(best_val, unsolved if frontier is None else min(frontier, unsolved))
    if exact:
        return ReluSolution(best_val, c + E @ best_y, True)
    return ReluSolution(value, None, False)


def hardness_reduction_net(z, obj):
    """Two-layer network on [-1, 1]^m whose value at y is obj(c + E y)."""
    c, E = z.center, z.generators
    W1 = np.vstack([E, -E])
    b1 = np.concatenate([c, -c])
    w2 = np.concatenate([obj.c1 + obj.c2, -obj.c1])[None, :]
    return NetworkSpec((LayerSpec(W1, b1), LayerSpec(w2, np.zeros(1))), E.shape[1])
