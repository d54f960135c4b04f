"""Exact LP solver for box-bounded variables with ``>=`` inequality rows."""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
OPT_TOL = 1e-10


class LPIterationLimit(RuntimeError):
    pass


@dataclass
class LinearProgram:
    objective: np.ndarray
    var_lo: np.ndarray
    var_hi: np.ndarray
    rows: np.ndarray = None
    rhs: np.ndarray = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        n = self.objective.size
        self.var_lo = np.asarray(self.var_lo, dtype=float).reshape(-1)
        self.var_hi = np.asarray(self.var_hi, dtype=float).reshape(-1)
        if self.rows is None:
            self.rows = np.zeros((0, n))
            self.rhs = np.zeros(0)
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        if self.var_lo.size != n or self.var_hi.size != n or self.rhs.size != self.rows.shape[0]:
            raise ValueError("inconsistent LP dimensions")
        if np.any(self.var_lo > self.var_hi):
            raise ValueError("var_lo exceeds var_hi")
        for arr in (self.objective, self.var_lo, self.var_hi, self.rows, self.rhs):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")

    @classmethod
    def from_constraints(cls, objective, var_lo, var_hi, constraints):
        """Build from a list of ``(row, rhs)`` pairs meaning ``row . x >= rhs``."""
        n = len(objective)
        if constraints:
            rows = np.array([r for r, _ in constraints], dtype=float).reshape(-1, n)
            rhs = np.array([b for _, b in constraints], dtype=float)
        else:
            rows, rhs = None, None
        return cls(objective, var_lo, var_hi, rows, rhs)


@dataclass
class LPResult:
    optimal: bool
    value: float = float("inf")
    x: np.ndarray = field(default=None, repr=False)
    iterations: int = 0

    @property
    def infeasible(self):
        return not self.optimal


def _normalize(lp):
    """Scale rows to unit max-norm and drop all-zero rows; None if a zero row is violated."""
    A, r = lp.rows, lp.rhs
    scale = np.abs(A).max(axis=1) if A.size else np.zeros(0)
    zero = scale == 0
    if np.any(r[zero] > FEAS_TOL):
        return None
    A = A[~zero] / scale[~zero, None]
    r = r[~zero] / scale[~zero]
    return A, r


def _refine(A, r, lp, x_full, basis):
    """Recompute basic values from the nonbasic ones to remove pivot drift."""
    p, n = A.shape
    if p == 0:
        return x_full[:n]
    M = np.hstack([A, -np.eye(p)])
    cols = basis[basis < n + p]
    if cols.size != p:
        return x_full[:n]
    nonbasic = np.setdiff1d(np.arange(n + p), cols)
    rhs = r - M[:, nonbasic] @ x_full[nonbasic]
    try:
        xb = np.linalg.solve(M[:, cols], rhs)
    except np.linalg.LinAlgError:
        return x_full[:n]
    refined = x_full[: n + p].copy()
    refined[cols] = xb
    x = refined[:n]
    if np.all(x >= lp.var_lo - FEAS_TOL) and np.all(x <= lp.var_hi + FEAS_TOL):
        return np.clip(x, lp.var_lo, lp.var_hi)
    return x_full[:n]


def solve_lp(lp):
    """Globally optimal solution of a boxed LP, or an infeasibility certificate.

    Raises LPIterationLimit when the pivot budget ``50 (n + rows)`` runs out.
    """
    norm = _normalize(lp)
    if norm is None:
        return LPResult(False)
    A, r = norm
    n = lp.objective.size
    p = A.shape[0]
    if p == 0:
        x = np.where(lp.objective < 0, lp.var_hi, lp.var_lo)
        return LPResult(True, float(lp.objective @ x), x, 0)
    # slack upper bound: the largest value A_i x - r_i can take on the box
    smax = np.maximum(A, 0) @ lp.var_hi + np.minimum(A, 0) @ lp.var_lo - r
    if np.any(smax < -FEAS_TOL):
        return LPResult(False)
    smax = np.maximum(smax, 0.0)
    max_iter = 50 * (n + p)
    status, x_full, basis, iters = kernels.bounded_simplex(
        np.ascontiguousarray(A), np.ascontiguousarray(r), lp.objective.copy(),
        lp.var_lo.copy(), lp.var_hi.copy(), smax, max_iter, PIVOT_TOL, FEAS_TOL, OPT_TOL,
    )
    if status == kernels.INFEASIBLE:
        return LPResult(False, iterations=iters)
    if status != kernels.OPTIMAL:
        raise LPIterationLimit(f"simplex stopped with status {status} after {iters} iterations")
    x = _refine(A, r, lp, np.asarray(x_full), np.asarray(basis))
    return LPResult(True, float(lp.objective @ x), x, iters)
