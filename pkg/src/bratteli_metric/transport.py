"""Finite Kantorovich (optimal transport) distances.

Two arithmetic modes, always chosen explicitly:

``"exact"``
    Fractions throughout.  Masses and costs are scaled to integers and fed
    to the transportation simplex with zero tolerance, so the optimum is an
    exact rational.
``"float"``
    Doubles, solved by the compiled kernel when available.  For ground
    distances in ``[0, 1]`` the optimum is accurate to well under ``1e-9``.

Zero-mass points are dropped before solving.  The plan returned among
several optima is whichever the deterministic pivoting rule (Bland) reaches
from the northwest-corner start.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterator, Sequence

import numpy as np

from . import _accel, _lp
from ._pykernels import transport_simplex

__all__ = [
    "GroundMetric",
    "TransportPlan",
    "MetricError",
    "TransportError",
    "kantorovich",
    "kantorovich_to_delta",
    "dual_lipschitz",
    "brute_force_oracle",
    "enumerate_basic_plans",
    "kr_norm",
    "solve_exact",
    "FLOAT_TOL",
]

FLOAT_TOL = 1e-9
MODES = ("exact", "float")


class MetricError(ValueError):
    pass


class TransportError(ValueError):
    pass


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    return Fraction(x)


class GroundMetric:
    """Symmetric distance matrix on a finite point set.

    ``matrix`` is an object array of Fractions (exact) or a float64 array.
    """

    def __init__(self, matrix, check: bool = True, exact: bool | None = None):
        arr = np.asarray(matrix.matrix if hasattr(matrix, "matrix") else matrix)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise MetricError(f"metric must be square, got shape {arr.shape}")
        if exact is None:
            exact = arr.dtype == object or np.issubdtype(arr.dtype, np.integer)
        if exact:
            out = np.empty(arr.shape, dtype=object)
            for idx, x in np.ndenumerate(arr):
                out[idx] = _to_fraction(x)
        else:
            out = arr.astype(float)
        self.matrix = out
        self.exact = bool(exact)
        if check:
            problems = self.problems()
            if problems:
                raise MetricError("; ".join(problems[:5]))

    @classmethod
    def discrete(cls, size: int) -> "GroundMetric":
        M = np.empty((size, size), dtype=object)
        for i in range(size):
            for j in range(size):
                M[i, j] = Fraction(int(i != j))
        return cls(M, check=False, exact=True)

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def problems(self, tol: float = FLOAT_TOL) -> list[str]:
        """Violated metric axioms; triangle checks cover all triples."""
        M = self.matrix
        t = 0 if self.exact else tol
        out = []
        n = len(self)
        for i in range(n):
            if abs(M[i, i]) > t:
                out.append(f"nonzero diagonal at {i}")
            for j in range(n):
                if M[i, j] < -t:
                    out.append(f"negative distance at ({i},{j})")
                if abs(M[i, j] - M[j, i]) > t:
                    out.append(f"asymmetric at ({i},{j})")
        for k in range(n):
            # M[i,j] <= M[i,k] + M[k,j] for all i, j
            bad = np.argwhere((M[:, k][:, None] + M[k, :][None, :] - M) < -t) if n else []
            for i, j in bad[:3]:
                out.append(f"triangle violated at ({i},{k},{j})")
        return out

    def min_offdiag(self):
        n = len(self)
        return min(self.matrix[i, j] for i in range(n) for j in range(n) if i != j)

    def max_entry(self):
        return max(self.matrix.flat) if len(self) else 0


def _matrix(rho) -> tuple[np.ndarray, bool]:
    if isinstance(rho, GroundMetric):
        return rho.matrix, rho.exact
    if hasattr(rho, "matrix") and hasattr(rho, "exact"):
        return rho.matrix, rho.exact
    g = GroundMetric(rho, check=False)
    return g.matrix, g.exact


@dataclass(frozen=True)
class TransportPlan:
    entries: tuple[tuple[int, int, object], ...]
    value: object
    shape: tuple[int, int]

    def dense(self) -> np.ndarray:
        exact = not isinstance(self.value, float)
        M = np.zeros(self.shape, dtype=object if exact else float)
        if exact:
            M[:, :] = Fraction(0)
        for i, j, x in self.entries:
            M[i, j] = x
        return M

    def marginals(self):
        M = self.dense()
        return list(M.sum(axis=1)), list(M.sum(axis=0))

    def csv_rows(self) -> list[tuple[int, int, str]]:
        return [(i, j, str(x) if isinstance(x, Fraction) else repr(float(x)))
                for i, j, x in self.entries]


def _check_measure(x, size: int, exact: bool, name: str):
    if len(x) != size:
        raise TransportError(f"{name} has dimension {len(x)}, metric has {size}")
    if exact:
        vals = [_to_fraction(t) for t in x]
        if any(t < 0 for t in vals):
            raise TransportError(f"{name} has negative mass")
        if sum(vals) != 1:
            raise TransportError(f"{name} sums to {sum(vals)}, not 1")
    else:
        vals = [float(t) for t in x]
        if any(t < -FLOAT_TOL for t in vals):
            raise TransportError(f"{name} has negative mass")
        if abs(sum(vals) - 1.0) > FLOAT_TOL:
            raise TransportError(f"{name} sums to {sum(vals)}, not 1")
        vals = [t if t > 0 else 0.0 for t in vals]
    return vals


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def solve_exact(a: Sequence[Fraction], b: Sequence[Fraction], cost) -> tuple[Fraction, list]:
    """Exact transport between positive mass vectors ``a``, ``b`` with cost rows ``cost``.

    Masses are scaled by the lcm of their denominators and costs by the lcm
    of theirs, so the simplex runs on Python ints.
    """
    m, n = len(a), len(b)
    if m == 1:
        val = sum((b[j] * cost[0][j] for j in range(n)), Fraction(0))
        return val, [(0, j, b[j]) for j in range(n)]
    if n == 1:
        val = sum((a[i] * cost[i][0] for i in range(m)), Fraction(0))
        return val, [(i, 0, a[i]) for i in range(m)]
    L = lcm(*(x.denominator for x in itertools.chain(a, b)))
    K = lcm(*(Fraction(c).denominator for row in cost for c in row))
    ai = [int(x * L) for x in a]
    bi = [int(x * L) for x in b]
    ci = [[int(Fraction(c) * K) for c in row] for row in cost]
    val, plan, _, _ = transport_simplex(ai, bi, ci, 0)
    return Fraction(val, L * K), [(i, j, Fraction(x, L)) for i, j, x in plan]


def kantorovich(mu, nu, rho, mode: str = "exact") -> tuple[object, TransportPlan]:
    """Optimal transport cost between ``mu`` and ``nu`` under ground metric ``rho``.

    Returns ``(distance, plan)``.
    """
    _check_mode(mode)
    M, _ = _matrix(rho)
    size = M.shape[0]
    exact = mode == "exact"
    a = _check_measure(mu, size, exact, "mu")
    b = _check_measure(nu, size, exact, "nu")
    I = [i for i in range(size) if a[i] > 0]
    J = [j for j in range(size) if b[j] > 0]
    if exact:
        cost = [[_to_fraction(M[i, j]) for j in J] for i in I]
        val, plan = solve_exact([a[i] for i in I], [b[j] for j in J], cost)
    else:
        sub = np.asarray(M, dtype=float)[np.ix_(I, J)]
        aa = np.array([a[i] for i in I])
        bb = np.array([b[j] for j in J])
        val, plan = _accel.transport_float(aa / aa.sum(), bb / bb.sum(), sub)
        val = float(val)
    entries = tuple(sorted((I[i], J[j], x) for i, j, x in plan))
    return val, TransportPlan(entries, val, (size, size))


def kantorovich_to_delta(mu, vertex: int, rho, mode: str = "exact"):
    """``sum_j mu_j rho(vertex, j)``: transport cost from ``mu`` to a point mass."""
    _check_mode(mode)
    M, _ = _matrix(rho)
    size = M.shape[0]
    if not 0 <= vertex < size:
        raise IndexError(f"vertex {vertex} outside [0, {size})")
    exact = mode == "exact"
    a = _check_measure(mu, size, exact, "mu")
    if exact:
        return sum((a[j] * _to_fraction(M[vertex, j]) for j in range(size) if a[j]), Fraction(0))
    return float(np.dot(np.asarray(M[vertex], dtype=float), a))


def dual_lipschitz(mu, nu, rho) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Exact Kantorovich-Rubinstein dual: max of ``sum u (mu - nu)`` over 1-Lipschitz ``u``.

    Solved as a dense LP over the points carrying mass, independent of the
    transportation simplex.  The potential is normalised to vanish at the
    first such point and extended to massless points by the McShane formula
    ``u(x) = min_y u(y) + rho(x, y)``.
    """
    M, _ = _matrix(rho)
    size = M.shape[0]
    a = _check_measure(mu, size, True, "mu")
    b = _check_measure(nu, size, True, "nu")
    S = [i for i in range(size) if a[i] or b[i]]
    D = [[_to_fraction(M[i, j]) for j in range(size)] for i in range(size)]
    c = [a[i] - b[i] for i in S]
    A, rhs = [], []
    k = len(S)
    for p in range(k):
        for q in range(k):
            if p != q:
                row = [0] * k
                row[p], row[q] = 1, -1
                A.append(row)
                rhs.append(D[S[p]][S[q]])
    if not A:
        return Fraction(0), tuple(Fraction(0) for _ in range(size))
    value, w = _lp.maximize(c, A, rhs)
    base = w[0]
    u = {S[p]: w[p] - base for p in range(k)}
    potential = tuple(
        u[x] if x in u else min(u[y] + D[x][y] for y in S) for x in range(size))
    return value, potential


def enumerate_basic_plans(a: Sequence[Fraction], b: Sequence[Fraction]) -> Iterator[dict]:
    """Yield every basic feasible plan of the transportation polytope.

    Supports are spanning trees of the complete bipartite graph on the
    positive-mass rows and columns; each tree fixes the plan, which is kept
    when nonnegative.  Degenerate vertices may appear more than once.
    """
    a = [_to_fraction(x) for x in a]
    b = [_to_fraction(x) for x in b]
    m, n = len(a), len(b)
    cells = [(i, j) for i in range(m) for j in range(n)]
    for support in itertools.combinations(cells, m + n - 1):
        plan = _tree_plan(a, b, support)
        if plan is not None:
            yield plan


def _tree_plan(a, b, support):
    m, n = len(a), len(b)
    parent = list(range(m + n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in support:
        ri, rj = find(i), find(m + j)
        if ri == rj:
            return None
        parent[ri] = rj
    ra, rb = list(a), list(b)
    left = set(support)
    plan = {}
    while left:
        deg: dict[tuple[str, int], list] = {}
        for i, j in left:
            deg.setdefault(("r", i), []).append((i, j))
            deg.setdefault(("c", j), []).append((i, j))
        node, cell = next((k, v[0]) for k, v in sorted(deg.items()) if len(v) == 1)
        i, j = cell
        x = ra[i] if node[0] == "r" else rb[j]
        if x < 0:
            return None
        plan[cell] = x
        ra[i] -= x
        rb[j] -= x
        left.remove(cell)
    if any(ra) or any(rb):
        return None
    return plan


def brute_force_oracle(mu, nu, rho, max_support: int = 5) -> Fraction:
    """Minimum cost over all basic feasible plans, by exhaustive search.

    A basic plan can always be peeled one leaf at a time: pick a cell, ship
    ``min(residual row, residual column)`` and retire whichever side is
    exhausted.  Searching every such peel order (memoised on the residual
    state, with masses and costs scaled to integers) reaches every vertex of
    the transportation polytope, so the minimum found is the optimum.
    """
    M, _ = _matrix(rho)
    size = M.shape[0]
    a = _check_measure(mu, size, True, "mu")
    b = _check_measure(nu, size, True, "nu")
    I = [i for i in range(size) if a[i]]
    J = [j for j in range(size) if b[j]]
    if len(I) > max_support or len(J) > max_support:
        raise TransportError(
            f"supports {len(I)}x{len(J)} exceed enumeration bound {max_support}")
    L = lcm(*(x.denominator for x in a + b))
    K = lcm(*(_to_fraction(M[i, j]).denominator for i in I for j in J))
    A0 = tuple(int(a[i] * L) for i in I)
    B0 = tuple(int(b[j] * L) for j in J)
    C = [[int(_to_fraction(M[i, j]) * K) for j in J] for i in I]
    m, n = len(I), len(J)
    memo: dict[tuple, int] = {}

    def best(ra: tuple, rb: tuple) -> int:
        key = ra + rb
        if key in memo:
            return memo[key]
        out = None
        for i in range(m):
            ai = ra[i]
            if not ai:
                continue
            for j in range(n):
                bj = rb[j]
                if not bj:
                    continue
                if ai <= bj:
                    x, na, nb = ai, ra[:i] + (0,) + ra[i + 1:], rb[:j] + (bj - ai,) + rb[j + 1:]
                else:
                    x, na, nb = bj, ra[:i] + (ai - bj,) + ra[i + 1:], rb[:j] + (0,) + rb[j + 1:]
                v = C[i][j] * x + best(na, nb)
                if out is None or v < out:
                    out = v
        memo[key] = 0 if out is None else out
        return memo[key]

    return Fraction(best(A0, B0), L * K)


def kr_norm(signed, rho, mode: str = "exact"):
    """Kantorovich-Rubinstein norm of a zero-sum signed vector."""
    vals = [_to_fraction(x) if mode == "exact" else float(x) for x in signed]
    pos = [max(x, 0 * x) for x in vals]
    neg = [max(-x, 0 * x) for x in vals]
    mass = sum(pos)
    if (sum(neg) != mass) if mode == "exact" else abs(sum(neg) - mass) > FLOAT_TOL:
        raise TransportError("signed vector must have zero total mass")
    if not mass:
        return mass
    val, _ = kantorovich([x / mass for x in pos], [x / mass for x in neg], rho, mode)
    return mass * val
