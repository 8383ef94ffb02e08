# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled float kernels: transportation simplex and one metric-iteration step.

Same algorithm as ``_pykernels.transport_simplex`` (northwest corner, MODI
pricing, Bland's rule), specialised to doubles.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cnp.import_array()

BACKEND = "cython"

cdef double EPS = 1e-12
cdef int MAX_PIVOTS = 100000


cdef struct Work:
    double* ra
    double* rb
    double* u
    double* v
    char* seen
    int* parent
    int* stack
    int* cyc


cdef int _alloc(Work* w, int m, int n) noexcept nogil:
    cdef int N = m + n
    w.ra = <double*> malloc(m * sizeof(double))
    w.rb = <double*> malloc(n * sizeof(double))
    w.u = <double*> malloc(m * sizeof(double))
    w.v = <double*> malloc(n * sizeof(double))
    w.seen = <char*> malloc(N * sizeof(char))
    w.parent = <int*> malloc(N * sizeof(int))
    w.stack = <int*> malloc(N * sizeof(int))
    w.cyc = <int*> malloc(N * sizeof(int))
    if w.ra and w.rb and w.u and w.v and w.seen and w.parent and w.stack and w.cyc:
        return 0
    return 1


cdef void _release(Work* w) noexcept nogil:
    free(w.ra); free(w.rb); free(w.u); free(w.v)
    free(w.seen); free(w.parent); free(w.stack); free(w.cyc)


cdef void _potentials(int m, int n, double* C, char* basic, Work* w) noexcept nogil:
    cdef int i, j, node, sp = 0
    memset(w.seen, 0, m + n)
    w.seen[0] = 1
    w.u[0] = 0.0
    w.stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = w.stack[sp]
        if node < m:
            for j in range(n):
                if basic[node * n + j] and not w.seen[m + j]:
                    w.seen[m + j] = 1
                    w.v[j] = C[node * n + j] - w.u[node]
                    w.stack[sp] = m + j
                    sp += 1
        else:
            for i in range(m):
                if basic[i * n + node - m] and not w.seen[i]:
                    w.seen[i] = 1
                    w.u[i] = C[i * n + node - m] - w.v[node - m]
                    w.stack[sp] = i
                    sp += 1


cdef int _tree_path(int m, int n, char* basic, int ei, int ej, Work* w) noexcept nogil:
    """Fill ``w.cyc`` with basic cells from column ``ej`` back to row ``ei``; returns length."""
    cdef int i, j, k, node, nb, sp = 0, plen = 0
    memset(w.seen, 0, m + n)
    for k in range(m + n):
        w.parent[k] = -1
    w.seen[ei] = 1
    w.stack[sp] = ei
    sp += 1
    while sp > 0:
        sp -= 1
        node = w.stack[sp]
        if node == m + ej:
            break
        if node < m:
            for j in range(n):
                if basic[node * n + j] and not w.seen[m + j]:
                    w.seen[m + j] = 1
                    w.parent[m + j] = node
                    w.stack[sp] = m + j
                    sp += 1
        else:
            for i in range(m):
                if basic[i * n + node - m] and not w.seen[i]:
                    w.seen[i] = 1
                    w.parent[i] = node
                    w.stack[sp] = i
                    sp += 1
    node = m + ej
    while w.parent[node] >= 0:
        nb = w.parent[node]
        if node < m:
            w.cyc[plen] = node * n + (nb - m)
        else:
            w.cyc[plen] = nb * n + (node - m)
        plen += 1
        node = nb
    return plen


cdef int _solve(int m, int n, double* a, double* b, double* C,
                double* X, char* basic, double* out_cost, Work* w) noexcept nogil:
    """Returns 0 on success, 2 when the pivot limit is hit."""
    cdef int i, j, k, it, ei, ej, plen, best
    cdef double t, theta
    for i in range(m):
        w.ra[i] = a[i]
    for j in range(n):
        w.rb[j] = b[j]
    memset(basic, 0, m * n)
    for k in range(m * n):
        X[k] = 0.0
    i = 0
    j = 0
    while True:
        t = w.ra[i] if w.ra[i] < w.rb[j] else w.rb[j]
        if t < 0:
            t = 0.0
        X[i * n + j] = t
        basic[i * n + j] = 1
        w.ra[i] -= t
        w.rb[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1 or w.ra[i] <= EPS:
            i += 1
        else:
            j += 1

    for it in range(MAX_PIVOTS):
        _potentials(m, n, C, basic, w)
        ei = -1
        ej = -1
        for i in range(m):
            for j in range(n):
                if not basic[i * n + j] and C[i * n + j] - w.u[i] - w.v[j] < -EPS:
                    ei = i
                    ej = j
                    break
            if ei >= 0:
                break
        if ei < 0:
            t = 0.0
            for k in range(m * n):
                if basic[k]:
                    t += X[k] * C[k]
            out_cost[0] = t
            return 0
        plen = _tree_path(m, n, basic, ei, ej, w)
        theta = X[w.cyc[0]]
        k = 2
        while k < plen:
            if X[w.cyc[k]] < theta:
                theta = X[w.cyc[k]]
            k += 2
        best = -1
        k = 0
        while k < plen:
            if X[w.cyc[k]] <= theta + EPS and (best < 0 or w.cyc[k] < best):
                best = w.cyc[k]
            k += 2
        for k in range(plen):
            if k % 2 == 0:
                X[w.cyc[k]] -= theta
                if X[w.cyc[k]] < 0:
                    X[w.cyc[k]] = 0.0
            else:
                X[w.cyc[k]] += theta
        basic[best] = 0
        X[best] = 0.0
        basic[ei * n + ej] = 1
        X[ei * n + ej] = theta
    return 2


def transport_float(a, b, C):
    """Float transport solve; returns ``(cost, plan)`` with ``plan`` as ``(i, j, x)`` triples."""
    cdef cnp.ndarray[double, ndim=1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] B = np.ascontiguousarray(b, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] CC = np.ascontiguousarray(C, dtype=np.float64)
    cdef int m = A.shape[0], n = B.shape[0]
    if CC.shape[0] != m or CC.shape[1] != n:
        raise ValueError("cost matrix shape does not match marginals")
    cdef cnp.ndarray[double, ndim=1] X = np.zeros(m * n)
    cdef cnp.ndarray[char, ndim=1] basic = np.zeros(m * n, dtype=np.int8)
    cdef double cost = 0.0
    cdef Work w
    cdef int status
    if _alloc(&w, m, n):
        _release(&w)
        raise MemoryError()
    status = _solve(m, n, &A[0], &B[0], &CC[0, 0], &X[0], &basic[0], &cost, &w)
    _release(&w)
    if status:
        raise RuntimeError("transportation simplex exceeded pivot limit")
    plan = [(k // n, k % n, X[k]) for k in range(m * n) if basic[k] and X[k] > EPS]
    return cost, plan


def level_step(rho, indptr, indices, weights):
    """Next-level metric from ``rho`` and the float CSR cotransition rows."""
    cdef cnp.ndarray[double, ndim=2] R = np.ascontiguousarray(rho, dtype=np.float64)
    cdef cnp.ndarray[long long, ndim=1] ptr = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.ndarray[long long, ndim=1] idx = np.ascontiguousarray(indices, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] wts = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int W = ptr.shape[0] - 1
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((W, W))
    cdef int p, q, i, j, mp, mq, maxdeg = 1, status = 0
    cdef long long sp, sq
    cdef double d, cost
    cdef Work w
    for p in range(W):
        if ptr[p + 1] - ptr[p] > maxdeg:
            maxdeg = <int> (ptr[p + 1] - ptr[p])
    cdef double* C = <double*> malloc(maxdeg * maxdeg * sizeof(double))
    cdef double* X = <double*> malloc(maxdeg * maxdeg * sizeof(double))
    cdef char* basic = <char*> malloc(maxdeg * maxdeg * sizeof(char))
    if not (C and X and basic):
        free(C); free(X); free(basic)
        raise MemoryError()
    if _alloc(&w, maxdeg, maxdeg):
        free(C); free(X); free(basic)
        _release(&w)
        raise MemoryError()
    with nogil:
        for p in range(W):
            sp = ptr[p]
            mp = <int> (ptr[p + 1] - sp)
            for q in range(p + 1, W):
                sq = ptr[q]
                mq = <int> (ptr[q + 1] - sq)
                if mp == 1:
                    d = 0.0
                    for j in range(mq):
                        d += R[idx[sp], idx[sq + j]] * wts[sq + j]
                elif mq == 1:
                    d = 0.0
                    for i in range(mp):
                        d += R[idx[sq], idx[sp + i]] * wts[sp + i]
                else:
                    for i in range(mp):
                        for j in range(mq):
                            C[i * mq + j] = R[idx[sp + i], idx[sq + j]]
                    status = _solve(mp, mq, &wts[sp], &wts[sq], C, X, basic, &cost, &w)
                    if status:
                        break
                    d = cost
                out[p, q] = d
                out[q, p] = d
            if status:
                break
    free(C); free(X); free(basic)
    _release(&w)
    if status:
        raise RuntimeError("transportation simplex exceeded pivot limit")
    return out
