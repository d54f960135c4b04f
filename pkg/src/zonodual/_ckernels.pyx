# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see _pykernels.py for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, hypot, fabs, INFINITY, isfinite
from libc.stdlib cimport qsort, malloc, free

cnp.import_array()

cdef enum:
    _LOWER = 0
    _UPPER = 1
    _BASIC = 2

cdef enum:
    ST_OPTIMAL = 0
    ST_INFEASIBLE = 1
    ST_ITERATION_LIMIT = 2
    ST_UNBOUNDED = 3

OPTIMAL = ST_OPTIMAL
INFEASIBLE = ST_INFEASIBLE
ITERATION_LIMIT = ST_ITERATION_LIMIT
UNBOUNDED = ST_UNBOUNDED


cdef struct GenKey:
    double ang
    double mag
    Py_ssize_t idx


cdef int _cmp_gen(const void* pa, const void* pb) noexcept nogil:
    cdef const GenKey* a = <const GenKey*>pa
    cdef const GenKey* b = <const GenKey*>pb
    # angle descending, then magnitude descending, then original index
    if a.ang > b.ang:
        return -1
    if a.ang < b.ang:
        return 1
    if a.mag > b.mag:
        return -1
    if a.mag < b.mag:
        return 1
    if a.idx < b.idx:
        return -1
    if a.idx > b.idx:
        return 1
    return 0


def zono2d_vertices(double[::1] center, double[:, :] gens):
    cdef Py_ssize_t m = gens.shape[1]
    cdef Py_ssize_t i
    if m == 0:
        return np.asarray(center).reshape(1, 2).copy()
    out_arr = np.empty((2 * m, 2))
    cdef double[:, ::1] out = out_arr
    cdef GenKey* keys = <GenKey*>malloc(m * sizeof(GenKey))
    if keys == NULL:
        raise MemoryError()
    cdef double sx = 0.0, sy = 0.0
    try:
        with nogil:
            for i in range(m):
                keys[i].ang = atan2(gens[1, i], gens[0, i])
                keys[i].mag = hypot(gens[0, i], gens[1, i])
                keys[i].idx = i
                sx += gens[0, i]
                sy += gens[1, i]
            qsort(keys, m, sizeof(GenKey), _cmp_gen)
            out[0, 0] = center[0] - sx
            out[0, 1] = center[1] - sy
            for i in range(m):
                out[i + 1, 0] = out[i, 0] + 2.0 * gens[0, keys[i].idx]
                out[i + 1, 1] = out[i, 1] + 2.0 * gens[1, keys[i].idx]
            for i in range(1, m):
                out[m + i, 0] = 2.0 * center[0] - out[i, 0]
                out[m + i, 1] = 2.0 * center[1] - out[i, 1]
    finally:
        free(keys)
    return out_arr


def candidate_argmin(double[:, :, :] points, double[:, :] c1, double[:, :] c2):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t K = points.shape[1]
    cdef Py_ssize_t b, k, arg
    cdef double px, py, v, best
    vals_arr = np.empty(n)
    idx_arr = np.empty(n, dtype=np.intp)
    cdef double[::1] vals = vals_arr
    cdef Py_ssize_t[::1] idx = idx_arr
    with nogil:
        for b in range(n):
            best = INFINITY
            arg = 0
            for k in range(K):
                px = points[b, k, 0]
                py = points[b, k, 1]
                v = c1[b, 0] * px + c1[b, 1] * py
                if px > 0:
                    v = v + c2[b, 0] * px
                else:
                    v = v + c2[b, 0] * 0.0
                if py > 0:
                    v = v + c2[b, 1] * py
                else:
                    v = v + c2[b, 1] * 0.0
                if v < best:
                    best = v
                    arg = k
            vals[b] = best
            idx[b] = arg
    return vals_arr, idx_arr


cdef int _simplex_core(double[:, ::1] T, double[::1] x, double[::1] vlo, double[::1] vhi,
                       long[::1] state, long[::1] basis, double[::1] d,
                       Py_ssize_t n, Py_ssize_t p, long max_iter, long* iters,
                       double piv_tol, double opt_tol) noexcept nogil:
    cdef Py_ssize_t ntot = T.shape[1]
    cdef Py_ssize_t i, j, enter, leave, out, b
    cdef double direction, best, lim, rate, alpha, flip, theta, rate_r, piv, f, dj
    cdef long st
    while True:
        enter = -1
        for j in range(ntot):
            st = state[j]
            if st == _BASIC or not (vhi[j] > vlo[j]):
                continue
            if (st == _LOWER and d[j] < -opt_tol) or (st == _UPPER and d[j] > opt_tol):
                enter = j
                break
        if enter < 0:
            return ST_OPTIMAL
        if iters[0] >= max_iter:
            return ST_ITERATION_LIMIT
        iters[0] += 1
        direction = 1.0 if state[enter] == _LOWER else -1.0
        best = INFINITY
        leave = -1
        for i in range(p):
            alpha = T[i, enter]
            if fabs(alpha) <= piv_tol:
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
            if not isfinite(flip):
                return ST_UNBOUNDED
            for i in range(p):
                x[basis[i]] -= direction * T[i, enter] * flip
            if state[enter] == _LOWER:
                x[enter] = vhi[enter]
                state[enter] = _UPPER
            else:
                x[enter] = vlo[enter]
                state[enter] = _LOWER
            continue
        theta = best
        rate_r = -direction * T[leave, enter]
        for i in range(p):
            x[basis[i]] -= direction * T[i, enter] * theta
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
        for j in range(ntot):
            T[leave, j] /= piv
        for i in range(p):
            if i == leave:
                continue
            f = T[i, enter]
            if f != 0.0:
                for j in range(ntot):
                    T[i, j] -= f * T[leave, j]
        dj = d[enter]
        for j in range(ntot):
            d[j] -= dj * T[leave, j]
        basis[leave] = enter
        state[enter] = _BASIC


def bounded_simplex(double[:, :] A, double[::1] r, double[::1] c, double[::1] lo, double[::1] hi,
                    double[::1] smax, long max_iter, double piv_tol, double feas_tol, double opt_tol):
    cdef Py_ssize_t p = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef Py_ssize_t ntot = n + 2 * p
    cdef Py_ssize_t i, j, s, a
    cdef double v, resid, sg, total
    cdef long iters = 0
    cdef int status = ST_OPTIMAL
    cdef int phase

    T_arr = np.zeros((p, ntot))
    x_arr = np.zeros(ntot)
    vlo_arr = np.zeros(ntot)
    vhi_arr = np.zeros(ntot)
    state_arr = np.zeros(ntot, dtype=np.int_)
    basis_arr = np.zeros(p, dtype=np.int_)
    d_arr = np.zeros(ntot)
    cost_arr = np.zeros(ntot)
    cdef double[:, ::1] T = T_arr
    cdef double[::1] x = x_arr
    cdef double[::1] vlo = vlo_arr
    cdef double[::1] vhi = vhi_arr
    cdef long[::1] state = state_arr
    cdef long[::1] basis = basis_arr
    cdef double[::1] d = d_arr
    cdef double[::1] cost = cost_arr

    with nogil:
        for j in range(n):
            vlo[j] = lo[j]
            vhi[j] = hi[j]
            if c[j] < 0:
                x[j] = hi[j]
                state[j] = _UPPER
            else:
                x[j] = lo[j]
                state[j] = _LOWER
        for i in range(p):
            vhi[n + i] = smax[i]
        for i in range(p):
            s = n + i
            a = n + p + i
            v = 0.0
            for j in range(n):
                v += A[i, j] * x[j]
            v -= r[i]
            if v >= -feas_tol and v <= smax[i] + feas_tol:
                for j in range(n):
                    T[i, j] = -A[i, j]
                T[i, s] = 1.0
                basis[i] = s
                state[s] = _BASIC
                if v < 0.0:
                    v = 0.0
                if v > smax[i]:
                    v = smax[i]
                x[s] = v
            else:
                if v < 0:
                    x[s] = 0.0
                    state[s] = _LOWER
                else:
                    x[s] = smax[i]
                    state[s] = _UPPER
                resid = x[s] - v
                sg = 1.0 if resid >= 0 else -1.0
                for j in range(n):
                    T[i, j] = A[i, j] * sg
                T[i, s] = -sg
                T[i, a] = 1.0
                basis[i] = a
                state[a] = _BASIC
                x[a] = fabs(resid)
                vhi[a] = INFINITY

        for phase in range(1, 3):
            for j in range(ntot):
                cost[j] = 0.0
            if phase == 1:
                for j in range(n + p, ntot):
                    cost[j] = 1.0
            else:
                for j in range(n):
                    cost[j] = c[j]
            for j in range(ntot):
                d[j] = cost[j]
            for i in range(p):
                if cost[basis[i]] != 0.0:
                    for j in range(ntot):
                        d[j] -= cost[basis[i]] * T[i, j]
            status = _simplex_core(T, x, vlo, vhi, state, basis, d, n, p, max_iter, &iters, piv_tol, 1e-9 if opt_tol <= 0 else opt_tol)
            if status != ST_OPTIMAL:
                break
            if phase == 1:
                total = 0.0
                for j in range(n + p, ntot):
                    total += x[j]
                if total > feas_tol:
                    status = ST_INFEASIBLE
                    break
                for j in range(n + p, ntot):
                    vhi[j] = 0.0
                    if state[j] != _BASIC:
                        x[j] = 0.0
                        state[j] = _LOWER
    return status, x_arr, basis_arr, iters
