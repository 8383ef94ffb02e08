"""Exact dense-tableau simplex for ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

The origin is feasible, so no phase one is needed.  Bland's rule keeps the
method finite under degeneracy.  Kept deliberately separate from the
transportation simplex so the Lipschitz dual is an independent route.
"""
from __future__ import annotations

from fractions import Fraction


class Unbounded(ArithmeticError):
    pass


def maximize(c, A, b, max_pivots=10_000):
    """Return ``(value, x)`` with exact Fractions."""
    m, n = len(A), len(c)
    if any(Fraction(t) < 0 for t in b):
        raise ValueError("right-hand side must be nonnegative")
    # columns 0..n-1 structural, n..n+m-1 slacks; row m holds reduced costs
    T = [[Fraction(A[i][j]) for j in range(n)] + [Fraction(int(k == i)) for k in range(m)]
         + [Fraction(b[i])] for i in range(m)]
    obj = [-Fraction(t) for t in c] + [Fraction(0)] * m + [Fraction(0)]
    basis = [n + i for i in range(m)]
    for _ in range(max_pivots):
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            x = [Fraction(0)] * n
            for i, var in enumerate(basis):
                if var < n:
                    x[var] = T[i][-1]
            return obj[-1], x
        best = None
        for i in range(m):
            piv = T[i][enter]
            if piv > 0:
                ratio = T[i][-1] / piv
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise Unbounded("objective unbounded")
        r = best[1]
        piv = T[r][enter]
        row = [t / piv for t in T[r]]
        T[r] = row
        for i in range(m):
            f = T[i][enter]
            if i != r and f:
                Ti = T[i]
                T[i] = [a - f * p for a, p in zip(Ti, row)]
        f = obj[enter]
        obj = [a - f * p for a, p in zip(obj, row)]
        basis[r] = enter
    raise RuntimeError("simplex exceeded pivot limit")
