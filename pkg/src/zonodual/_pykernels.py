"""Pure numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` exactly (same argument order, same return
layout, same tie-breaking) and are used when the extension is not built.
"""

import numpy as np

OPTIMAL = 0
INFEASIBLE = 1
ITERATION_LIMIT = 2
UNBOUNDED = 3

_LOWER = 0
_UPPER = 1
_BASIC = 2


def zono2d_vertices(center, gens):
    """Clockwise vertices of a 2-D zonotope.

    ``gens`` must be 2 x m, sign-normalized and free of colinear pairs.
    """
    m = gens.shape[1]
    if m == 0:
        return center.reshape(1, 2).copy()
    ang = np.arctan2(gens[1], gens[0])
    mag = np.hypot(gens[0], gens[1])
    order = np.lexsort((-mag, -ang))
    steps = 2.0 * gens[:, order].T
    out = np.empty((2 * m, 2))
    out[0] = center - gens.sum(axis=1)
    out[1 : m + 1] = out[0] + np.cumsum(steps, axis=0)
    out[m + 1 :] = 2.0 * center - out[1:m]
    return out


def candidate_argmin(points, c1, c2):
    """Per-block minimum of ``c1.p + c2.relu(p)`` over padded candidate lists.

    points: (n, K, 2); c1, c2: (n, 2). Returns (values, index) with the
    first minimizing candidate on ties.
    """
    px = points[:, :, 0]
    py = points[:, :, 1]
    vals = (
        c1[:, 0:1] * px + c1[:, 1:2] * py
        + c2[:, 0:1] * np.maximum(px, 0.0) + c2[:, 1:2] * np.maximum(py, 0.0)
    )
    idx = np.argmin(vals, axis=1)
    return vals[np.arange(vals.shape[0]), idx], idx


def bounded_simplex(A, r, c, lo, hi, smax, max_iter, piv_tol, feas_tol, opt_tol):
    """Two-phase bounded-variable primal simplex with Bland's rule.

    Solves ``min c.x  s.t.  A x >= r,  lo <= x <= hi`` where each row's slack
    ``A_i x - r_i`` is bounded above by ``smax[i]``.

    Returns ``(status, x_full, basis, iterations)``; ``x_full`` holds the
    structural, slack and artificial values in that order.
    """
    p, n = A.shape
    ntot = n + 2 * p
    T = np.zeros((p, ntot))
    vlo = np.zeros(ntot)
    vhi = np.zeros(ntot)
    vlo[:n] = lo
    vhi[:n] = hi
    vhi[n : n + p] = smax
    x = np.zeros(ntot)
    state = np.full(ntot, _LOWER, dtype=np.int64)
    basis = np.zeros(p, dtype=np.int64)

    for j in range(n):
        if c[j] < 0:
            x[j] = hi[j]
            state[j] = _UPPER
        else:
            x[j] = lo[j]
    for i in range(p):
        s = n + i
        a = n + p + i
        v = A[i] @ x[:n] - r[i]
        if -feas_tol <= v <= smax[i] + feas_tol:
            T[i, :n] = -A[i]
            T[i, s] = 1.0
            basis[i] = s
            state[s] = _BASIC
            x[s] = min(max(v, 0.0), smax[i])
        else:
            if v < 0:
                x[s] = 0.0
            else:
                x[s] = smax[i]
                state[s] = _UPPER
            resid = r[i] - (v + r[i] - x[s])
            sg = 1.0 if resid >= 0 else -1.0
            T[i, :n] = A[i] * sg
            T[i, s] = -sg
            T[i, a] = 1.0
            basis[i] = a
            state[a] = _BASIC
            x[a] = abs(resid)
            vhi[a] = np.inf

    iters = 0
    for phase in (1, 2):
        cost = np.zeros(ntot)
        if phase == 1:
            cost[n + p :] = 1.0
        else:
            cost[:n] = c
        d = cost - cost[basis] @ T
        while True:
            enter = -1
            for j in range(ntot):
                st = state[j]
                if st == _BASIC or not vhi[j] > vlo[j]:
                    continue
                if (st == _LOWER and d[j] < -opt_tol) or (st == _UPPER and d[j] > opt_tol):
                    enter = j
                    break
            if enter < 0:
                break
            if iters >= max_iter:
                return ITERATION_LIMIT, x, basis, iters
            iters += 1
            direction = 1.0 if state[enter] == _LOWER else -1.0
            col = T[:, enter]
            best = np.inf
            leave = -1
            for i in range(p):
                alpha = col[i]
                if abs(alpha) <= piv_tol:
                    continue
                rate = -direction * alpha
                b = basis[i]
                if rate < 0:
                    lim = (x[b] - vlo[b]) / -rate
                else:
                    lim = (vhi[b] - x[b]) / rate
                if lim < 0:
                    lim = 0.0
                if lim < best or (lim == best and leave >= 0 and b < basis[leave]):
                    best = lim
                    leave = i
            flip = vhi[enter] - vlo[enter]
            if flip <= best:
                if not np.isfinite(flip):
                    return UNBOUNDED, x, basis, iters
                x[basis] -= direction * col * flip
                if state[enter] == _LOWER:
                    x[enter] = vhi[enter]
                    state[enter] = _UPPER
                else:
                    x[enter] = vlo[enter]
                    state[enter] = _LOWER
                continue
            theta = best
            rate_r = -direction * col[leave]
            x[basis] -= direction * col * theta
            x[enter] += direction * theta
            out = basis[leave]
            if rate_r < 0:
                x[out] = vlo[out]
                state[out] = _LOWER
            else:
                x[out] = vhi[out]
                state[out] = _UPPER
            if out >= n + p:
                vhi[out] = 0.0
                x[out] = 0.0
                state[out] = _LOWER
            piv = T[leave, enter]
            T[leave] /= piv
            f = T[:, enter].copy()
            f[leave] = 0.0
            T -= np.outer(f, T[leave])
            d -= d[enter] * T[leave]
            basis[leave] = enter
            state[enter] = _BASIC
        if phase == 1:
            if x[n + p :].sum() > feas_tol:
                return INFEASIBLE, x, basis, iters
            vhi[n + p :] = 0.0
            for a in range(n + p, ntot):
                if state[a] != _BASIC:
                    x[a] = 0.0
                    state[a] = _LOWER
    return OPTIMAL, x, basis, iters
