"""The internal metric: Kantorovich extensions iterated up the levels of a graph.

Starting from a metric on level ``k``, the distance between two vertices of
level ``n + 1`` is the transport cost, under the level-``n`` metric, between
their cotransition rows (the projections of their point masses).
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import _accel
from .graph import CotransitionKernel, GradedGraph, GraphError, LevelDistribution, cotransitions
from .transport import GroundMetric, MetricError, solve_exact

__all__ = [
    "LevelMetric",
    "InternalMetricSequence",
    "iterate_metric",
    "cross_level_distance",
    "distance_to_vertices",
    "compare_initial_metrics",
    "ComparisonReport",
    "transition_costs",
    "projection_matrix",
]

log = logging.getLogger(__name__)

DEFAULT_BIT_CUTOFF = 4096


@dataclass(frozen=True)
class LevelMetric:
    level: int
    matrix: np.ndarray
    provenance: Mapping[str, object] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.matrix.dtype == object

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def as_float(self) -> np.ndarray:
        return self.matrix.astype(float) if self.exact else self.matrix

    def problems(self) -> list[str]:
        return GroundMetric(self.matrix, check=False, exact=self.exact).problems()

    def diameter(self):
        return max(self.matrix.flat) if len(self) else 0

    def csv_rows(self) -> list[tuple[int, int, int, str]]:
        fmt = str if self.exact else (lambda x: repr(float(x)))
        n = len(self)
        return [(self.level, u, v, fmt(self.matrix[u, v])) for u in range(n) for v in range(n)]

    def to_json(self) -> dict:
        fmt = str if self.exact else (lambda x: repr(float(x)))
        return {
            "provenance": dict(self.provenance),
            "level": self.level,
            "matrix": [[fmt(x) for x in row] for row in self.matrix],
        }


@dataclass(frozen=True)
class InternalMetricSequence:
    metrics: tuple[LevelMetric, ...]
    kernel: CotransitionKernel
    provenance: Mapping[str, object] = field(default_factory=dict)

    @property
    def start(self) -> int:
        return self.metrics[0].level

    @property
    def stop(self) -> int:
        return self.metrics[-1].level

    def at(self, n: int) -> LevelMetric:
        if not self.start <= n <= self.stop:
            raise GraphError(f"level {n} outside metric range [{self.start}, {self.stop}]")
        return self.metrics[n - self.start]

    def __iter__(self) -> Iterator[LevelMetric]:
        return iter(self.metrics)

    def __len__(self) -> int:
        return len(self.metrics)


def _pair_exact(rho, rp, rq) -> Fraction:
    if rp == rq:
        return Fraction(0)
    cost = [[rho[i, j] for j, _ in rq] for i, _ in rp]
    val, _ = solve_exact([w for _, w in rp], [w for _, w in rq], cost)
    return val


def _exact_rows(args) -> list[tuple[int, int, Fraction]]:
    rho, rows, ps = args
    out = []
    for p in ps:
        for q in range(p + 1, len(rows)):
            out.append((p, q, _pair_exact(rho, rows[p], rows[q])))
    return out


def _exact_step(rho: np.ndarray, rows, jobs: int = 1) -> np.ndarray:
    W = len(rows)
    out = np.empty((W, W), dtype=object)
    out[:, :] = Fraction(0)
    if jobs > 1 and W > 8:
        chunks = [list(range(s, W, jobs)) for s in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_exact_rows, [(rho, rows, c) for c in chunks]))
    else:
        results = [_exact_rows((rho, rows, range(W)))]
    for res in results:
        for p, q, d in res:
            out[p, q] = out[q, p] = d
    return out


def _max_denominator_bits(M: np.ndarray) -> int:
    return max((x.denominator.bit_length() for x in M.flat), default=0)


def iterate_metric(graph: GradedGraph, kernel: CotransitionKernel | None = None,
                   initial=None, up_to: int | None = None, start: int | None = None,
                   mode: str = "exact", bit_cutoff: int = DEFAULT_BIT_CUTOFF,
                   jobs: int = 1, initial_name: str | None = None) -> InternalMetricSequence:
    """Internal metrics on levels ``start .. up_to``.

    ``start`` defaults to the first level with two or more vertices (level 1
    on most graphs; a one-vertex level would make every later distance 0).
    ``initial`` defaults to the discrete metric on level ``start``.  In exact
    mode the iteration falls back to floats once some denominator exceeds
    ``bit_cutoff`` bits; the level where that happened is recorded in the
    provenance.
    """
    if mode not in ("exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    if up_to is None:
        up_to = graph.depth
    if start is None:
        start = next((n for n in range(1, up_to + 1) if graph.width(n) > 1), 1)
    if not (1 <= start <= up_to <= graph.depth):
        raise GraphError(f"levels [{start}, {up_to}] not within [1, {graph.depth}]")
    if kernel is None:
        kernel = cotransitions(graph)
    if initial is None:
        rho = GroundMetric.discrete(graph.width(start))
        initial_name = initial_name or "discrete"
    else:
        rho = initial if isinstance(initial, GroundMetric) else GroundMetric(
            initial.matrix if isinstance(initial, LevelMetric) else initial)
        initial_name = initial_name or "user"
    if rho.problems():
        raise MetricError("invalid initial metric: " + "; ".join(rho.problems()[:3]))
    if len(rho) != graph.width(start):
        raise MetricError(f"initial metric has size {len(rho)}, level {start} has {graph.width(start)}")

    exact = mode == "exact"
    M = rho.matrix if exact else np.asarray(rho.matrix, dtype=float)
    if exact and not rho.exact:
        M = GroundMetric(rho.matrix, check=False, exact=True).matrix
    float_from = None
    base = {"initial": initial_name, "start": start, "requested_mode": mode,
            "bit_cutoff": bit_cutoff if exact else None, "backend": _accel.BACKEND}
    metrics = [LevelMetric(start, M, {**base, "mode": "exact" if exact else "float"})]
    for n in range(start, up_to):
        if exact and _max_denominator_bits(M) > bit_cutoff:
            exact = False
            float_from = n + 1
            log.info("denominators exceed %d bits at level %d; switching to float", bit_cutoff, n)
        if exact:
            M = _exact_step(M, kernel.rows[n], jobs)
        else:
            M = _accel.level_step(np.asarray(M, dtype=float), *kernel.csr(n + 1))
        metrics.append(LevelMetric(n + 1, M, {**base, "mode": "exact" if exact else "float"}))
    prov = {**base, "float_from_level": float_from, "stop": up_to}
    return InternalMetricSequence(tuple(metrics), kernel, prov)


def transition_costs(seq: InternalMetricSequence, n: int, exact: bool | None = None) -> np.ndarray:
    """Matrix ``S[x, y]``: cost from level-``n`` vertex ``x`` to the projection of level-``n+1`` vertex ``y``."""
    lm = seq.at(n)
    if exact is None:
        exact = lm.exact
    if exact:
        return np.dot(lm.matrix, seq.kernel.dense(n + 1))
    return lm.as_float() @ seq.kernel.dense_float(n + 1)


def projection_matrix(kernel: CotransitionKernel, m: int, n: int, rows: Sequence[int] | None = None,
                      exact: bool = True) -> np.ndarray:
    """Rows are ``p_{m,n}(δ_γ)`` for the chosen level-``m`` vertices ``γ`` (default all)."""
    if n > m:
        raise GraphError("projection goes downwards")
    if rows is None:
        rows = range(kernel.widths[m])
    rows = list(rows)
    if not exact:
        D = np.zeros((len(rows), kernel.widths[m]))
        D[np.arange(len(rows)), rows] = 1.0
        for k in range(m, n, -1):
            D = D @ kernel.dense_float(k).T
        return D
    D = np.empty((len(rows), kernel.widths[m]), dtype=object)
    D[:, :] = Fraction(0)
    for r, g in enumerate(rows):
        D[r, g] = Fraction(1)
    for k in range(m, n, -1):
        nxt = np.empty((len(rows), kernel.widths[k - 1]), dtype=object)
        nxt[:, :] = Fraction(0)
        for v, row in enumerate(kernel.rows[k - 1]):
            col = D[:, v]
            if not any(col):
                continue
            for u, lam in row:
                nxt[:, u] = nxt[:, u] + col * lam
        D = nxt
    return D


def cross_level_distance(seq: InternalMetricSequence, e: tuple[int, int], f: tuple[int, int],
                         method: str = "chain"):
    """Distance from vertex ``e = (n, i)`` to vertex ``f = (m, j)``, ``m > n``.

    ``"chain"``: minimum over vertex chains through every intermediate level
    of the summed one-step distances, where one step from ``x`` (level ``i``)
    to ``y`` (level ``i + 1``) costs ``ρ_i(x, p(y))``.
    ``"projection"``: ``ρ_n(e, p_{m,n}(f))`` in one go; never larger than the
    chain value.
    """
    (n, i), (m, j) = e, f
    if n >= m:
        raise ValueError(f"need n < m, got {n} and {m}")
    for lvl in (n, m - 1):
        seq.at(lvl)
    exact = all(seq.at(k).exact for k in range(n, m))
    if method == "projection":
        P = projection_matrix(seq.kernel, m, n, [j], exact)[0]
        rho = seq.at(n).matrix if exact else seq.at(n).as_float()
        return sum((rho[i, u] * P[u] for u in range(len(P)) if P[u]), Fraction(0) if exact else 0.0)
    if method != "chain":
        raise ValueError(f"unknown method {method!r}")
    inf = None
    dist = [inf] * seq.kernel.widths[n]
    dist[i] = Fraction(0) if exact else 0.0
    for k in range(n, m):
        S = transition_costs(seq, k, exact)
        new = []
        for y in range(S.shape[1]):
            cands = [dist[x] + S[x, y] for x in range(len(dist)) if dist[x] is not None]
            new.append(min(cands) if cands else None)
        dist = new
    return dist[j]


def distance_to_vertices(dist: LevelDistribution, metric: LevelMetric):
    """Closest level vertex to ``dist`` in transport distance; ties go to the lower index."""
    if dist.level != metric.level or len(dist) != len(metric):
        raise GraphError(f"distribution at level {dist.level} vs metric at level {metric.level}")
    if metric.exact:
        vals = [sum((metric.matrix[g, j] * dist[j] for j in range(len(dist)) if dist[j]), Fraction(0))
                for g in range(len(dist))]
    else:
        vals = list(metric.matrix @ np.array([float(x) for x in dist.values]))
    best = min(range(len(vals)), key=lambda g: (vals[g], g))
    return vals[best], best


@dataclass(frozen=True)
class ComparisonReport:
    r: object
    r_prime: object
    rows: tuple[tuple[int, object, object], ...]  # (level, max A/B, max B/A)

    @property
    def ok(self) -> bool:
        return all(ab <= self.r and ba <= self.r_prime for _, ab, ba in self.rows)

    def to_dict(self) -> dict:
        return {"r": str(self.r), "r_prime": str(self.r_prime), "ok": self.ok,
                "rows": [{"level": n, "max_A_over_B": str(ab), "max_B_over_A": str(ba)}
                         for n, ab, ba in self.rows]}


def _max_ratio(A: np.ndarray, B: np.ndarray):
    best = 0
    W = A.shape[0]
    for p in range(W):
        for q in range(p + 1, W):
            a, b = A[p, q], B[p, q]
            if not b:
                if a:
                    return float("inf")
                continue
            best = max(best, a / b)
    return best


def compare_initial_metrics(graph: GradedGraph, kernel: CotransitionKernel | None,
                            rho_A, rho_B, up_to: int, start: int | None = None,
                            mode: str = "exact") -> ComparisonReport:
    """Iterate from two initial metrics and track the mutual domination constants."""
    A0 = GroundMetric(rho_A)
    B0 = GroundMetric(rho_B)
    for name, g in (("rho_A", A0), ("rho_B", B0)):
        if len(g) > 1 and not g.min_offdiag() > 0:
            raise MetricError(f"{name} is degenerate")
    if kernel is None:
        kernel = cotransitions(graph)
    sa = iterate_metric(graph, kernel, A0, up_to, start, mode)
    sb = iterate_metric(graph, kernel, B0, up_to, start, mode)
    r = _max_ratio(A0.matrix, B0.matrix)
    r_prime = _max_ratio(B0.matrix, A0.matrix)
    rows = tuple((a.level, _max_ratio(a.matrix, b.matrix), _max_ratio(b.matrix, a.matrix))
                 for a, b in zip(sa, sb))
    return ComparisonReport(r, r_prime, rows)
