"""Pure-Python transport kernels.

The transportation simplex here is generic over the number type: with
``eps=0`` and integer (or Fraction) data it is exact, with floats it uses
``eps`` as the reduced-cost / ratio tolerance.  The compiled module
``_ckernels`` mirrors the float entry points.
"""
from __future__ import annotations

import numpy as np

__all__ = ["transport_simplex", "transport_float", "level_step", "BACKEND"]

BACKEND = "python"

FLOAT_EPS = 1e-12
MAX_PIVOTS = 100_000


def transport_simplex(a, b, C, eps=0):
    """Minimise ``sum x_ij C[i][j]`` over plans with row sums ``a`` and column sums ``b``.

    Northwest-corner start, MODI pricing, Bland's rule on both the entering
    cell (smallest ``i * n + j`` with negative reduced cost) and the leaving
    cell (smallest index among ratio-test ties).  Returns
    ``(cost, plan, u, v)`` where ``plan`` lists ``(i, j, x)`` for basic cells
    with ``x > 0`` in index order and ``u, v`` are optimal dual potentials.
    """
    m, n = len(a), len(b)
    ra, rb = list(a), list(b)
    x = {}
    i = j = 0
    while True:
        t = ra[i] if ra[i] < rb[j] else rb[j]
        if t < 0:
            t = 0 * t
        x[(i, j)] = t
        ra[i] -= t
        rb[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1 or ra[i] <= eps:
            i += 1
        else:
            j += 1

    zero = 0 * C[0][0]
    for _ in range(MAX_PIVOTS):
        u, v = _potentials(m, n, x, C, zero)
        enter = None
        for ii in range(m):
            Ci, ui = C[ii], u[ii]
            for jj in range(n):
                if (ii, jj) not in x and Ci[jj] - ui - v[jj] < -eps:
                    enter = (ii, jj)
                    break
            if enter is not None:
                break
        if enter is None:
            cost = sum((t * C[ii][jj] for (ii, jj), t in x.items()), zero)
            plan = [(ii, jj, t) for (ii, jj), t in sorted(x.items()) if t > eps]
            return cost, plan, u, v
        ei, ej = enter
        # tree path from column node ej back to row node ei; signs alternate -,+,-,...
        path = _tree_path(m, x, ei, ej)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(x[c] for c in minus)
        leave = min((c for c in minus if x[c] <= theta + eps), key=lambda c: c[0] * n + c[1])
        for c in plus:
            x[c] += theta
        for c in minus:
            x[c] -= theta
            if x[c] < 0:
                x[c] = 0 * x[c]
        del x[leave]
        x[enter] = theta
    raise RuntimeError("transportation simplex exceeded pivot limit")


def _potentials(m, n, x, C, zero):
    rows = [[] for _ in range(m)]
    cols = [[] for _ in range(n)]
    for (i, j) in x:
        rows[i].append(j)
        cols[j].append(i)
    u = [None] * m
    v = [None] * n
    u[0] = zero
    stack = [(0, True)]
    while stack:
        k, is_row = stack.pop()
        if is_row:
            for j in rows[k]:
                if v[j] is None:
                    v[j] = C[k][j] - u[k]
                    stack.append((j, False))
        else:
            for i in cols[k]:
                if u[i] is None:
                    u[i] = C[i][k] - v[k]
                    stack.append((i, True))
    return u, v


def _tree_path(m, x, ei, ej):
    """Basic cells on the tree path from column ``ej`` to row ``ei``."""
    adj = {}
    for (i, j) in x:
        adj.setdefault(("r", i), []).append(("c", j))
        adj.setdefault(("c", j), []).append(("r", i))
    start, goal = ("r", ei), ("c", ej)
    parent = {start: None}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for nb in adj.get(node, ()):
            if nb not in parent:
                parent[nb] = node
                stack.append(nb)
    cells = []
    node = goal
    while parent[node] is not None:
        prev = parent[node]
        cells.append((node[1], prev[1]) if node[0] == "r" else (prev[1], node[1]))
        node = prev
    return cells


def transport_float(a, b, C):
    """Float transport solve; returns ``(cost, plan)``."""
    a = [float(t) for t in a]
    b = [float(t) for t in b]
    C = [[float(t) for t in row] for row in np.asarray(C, dtype=float)]
    cost, plan, _, _ = transport_simplex(a, b, C, FLOAT_EPS)
    return cost, plan


def level_step(rho, indptr, indices, weights):
    """Next-level metric from ``rho`` and the float CSR cotransition rows.

    Entry ``(p, q)`` is the transport cost under ``rho`` between the
    cotransition rows of vertices ``p`` and ``q``.
    """
    rho = np.asarray(rho, dtype=float)
    W = len(indptr) - 1
    out = np.zeros((W, W))
    rows = [(indices[indptr[p]:indptr[p + 1]].tolist(), weights[indptr[p]:indptr[p + 1]].tolist())
            for p in range(W)]
    for p in range(W):
        ip, wp = rows[p]
        for q in range(p + 1, W):
            iq, wq = rows[q]
            if len(ip) == 1:
                d = float(np.dot(rho[ip[0], iq], wq))
            elif len(iq) == 1:
                d = float(np.dot(rho[iq[0], ip], wp))
            else:
                sub = rho[np.ix_(ip, iq)].tolist()
                d, _, _, _ = transport_simplex(wp, wq, sub, FLOAT_EPS)
            out[p, q] = out[q, p] = d
    return out
