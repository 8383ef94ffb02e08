"""Covering numbers of levels, finite-horizon compactness diagnostics and Cauchy vertex sequences.

Every verdict here is computed over a finite range of levels and says so in
its report: none of them proves a statement about the infinite graph.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .graph import GradedGraph, GraphError
from .metric import InternalMetricSequence, LevelMetric

__all__ = [
    "Cover",
    "covering_number",
    "CoveringReport",
    "compactness_profile",
    "WidthReport",
    "bounded_width_check",
    "RegularSequence",
    "cauchy_modulus",
    "CauchyReport",
    "cauchy_classes",
    "trend_verdict",
]

BALL_TOL = 1e-9
EXACT_NET_LIMIT = 20


class Cover(NamedTuple):
    n: int
    net: tuple[int, ...]
    method: str


def _ball_matrix(metric: LevelMetric, epsilon) -> np.ndarray:
    if metric.exact:
        eps = Fraction(epsilon) if not isinstance(epsilon, float) else Fraction(epsilon).limit_denominator(10**12)
        return np.vectorize(lambda d: d <= eps, otypes=[bool])(metric.matrix) if len(metric) else \
            np.zeros((0, 0), dtype=bool)
    return metric.matrix <= float(epsilon) + BALL_TOL


def _farthest_point(inside: np.ndarray, D: np.ndarray) -> list[int]:
    W = len(D)
    net = [0]
    covered = inside[0].copy()
    nearest = D[0].copy()
    while not covered.all():
        far = np.where(covered, -np.inf, nearest)
        nxt = int(np.argmax(far))
        net.append(nxt)
        covered |= inside[nxt]
        nearest = np.minimum(nearest, D[nxt])
    assert len(net) <= W
    return net


def _greedy_set_cover(inside: np.ndarray) -> list[int]:
    uncovered = np.ones(len(inside), dtype=bool)
    net = []
    while uncovered.any():
        gains = (inside & uncovered).sum(axis=1)
        best = int(np.argmax(gains))
        net.append(best)
        uncovered &= ~inside[best]
    return sorted(net)


def _exact_net(inside: np.ndarray) -> list[int]:
    W = len(inside)
    masks = [sum(1 << j for j in range(W) if inside[i, j]) for i in range(W)]
    full = (1 << W) - 1
    for k in range(1, W + 1):
        for combo in combinations(range(W), k):
            acc = 0
            for i in combo:
                acc |= masks[i]
            if acc == full:
                return list(combo)
    raise AssertionError("unreachable: the full vertex set is a net")


def covering_number(metric: LevelMetric, epsilon, exact: bool = False) -> Cover:
    """Size of an ε-net of closed balls for the level's vertices.

    By default two greedy upper bounds are computed, farthest-point traversal
    from vertex 0 and greedy set cover, and the smaller is returned.  With
    ``exact=True`` levels of at most 20 vertices get an exhaustive minimum.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    W = len(metric)
    if W == 0:
        return Cover(0, (), "empty")
    inside = _ball_matrix(metric, epsilon)
    if exact and W <= EXACT_NET_LIMIT:
        net = _exact_net(inside)
        return Cover(len(net), tuple(net), "exact")
    fp = _farthest_point(inside, metric.as_float())
    sc = _greedy_set_cover(inside)
    if len(sc) < len(fp):
        return Cover(len(sc), tuple(sc), "greedy-set-cover")
    return Cover(len(fp), tuple(sorted(fp)), "greedy-farthest-point")


def is_cover(metric: LevelMetric, epsilon, net: Sequence[int]) -> bool:
    inside = _ball_matrix(metric, epsilon)
    return bool(inside[list(net)].any(axis=0).all()) if len(net) else len(metric) == 0


def trend_verdict(values: Sequence[float], limit: float, tol: float = 0.05) -> bool:
    """Finite-horizon test that ``values`` tend to ``limit``.

    The last value must lie within ``tol`` of the limit, and over the last
    half of the series at least half of the steps must not move away from it.
    """
    vals = [float(v) for v in values]
    if not vals:
        return False
    if abs(vals[-1] - limit) > tol:
        return False
    tail = vals[len(vals) // 2:]
    steps = list(zip(tail, tail[1:]))
    if not steps:
        return True
    good = sum(abs(b - limit) <= abs(a - limit) + 1e-12 for a, b in steps)
    return 2 * good >= len(steps)


@dataclass(frozen=True)
class CoveringReport:
    rows: tuple[tuple[float, int, Cover], ...]  # (epsilon, level, cover)
    horizon: tuple[int, int]
    mode: str

    def series(self, epsilon) -> list[tuple[int, int]]:
        return [(n, c.n) for e, n, c in self.rows if e == epsilon]

    @property
    def epsilons(self) -> list:
        return sorted({e for e, _, _ in self.rows})

    def uniformly_bounded(self, epsilon) -> bool:
        """Finite-horizon heuristic, not a proof.

        True when the largest covering number is already reached before the
        last third of the levels and the last third varies by at most one.
        """
        ns = [N for _, N in self.series(epsilon)]
        if len(ns) < 3:
            return False
        cut = len(ns) - len(ns) // 3
        head, tail = ns[:cut], ns[cut:]
        return max(tail) <= max(head) and max(tail) - min(tail) <= 1

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "level", "N", "method"])
        for e, n, c in self.rows:
            w.writerow([repr(float(e)), n, c.n, c.method])
        return buf.getvalue()

    def plot_csv_text(self) -> str:
        eps = self.epsilons
        by = {(e, n): c.n for e, n, c in self.rows}
        levels = sorted({n for _, n, _ in self.rows})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level"] + [f"N_eps_{float(e)!r}" for e in eps])
        for n in levels:
            w.writerow([n] + [by.get((e, n), "") for e in eps])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "horizon": list(self.horizon),
            "mode": self.mode,
            "note": "finite-horizon diagnostic; not a proof of uniform compactness",
            "epsilons": {
                repr(float(e)): {
                    "max_N": max(N for _, N in self.series(e)),
                    "final_N": self.series(e)[-1][1],
                    "uniformly_bounded_within_horizon": self.uniformly_bounded(e),
                    "strictly_increasing": all(a < b for (_, a), (_, b) in
                                               zip(self.series(e), self.series(e)[1:])),
                }
                for e in self.epsilons
            },
        }


def compactness_profile(seq: InternalMetricSequence, epsilons: Sequence, levels: Sequence[int] | None = None,
                        exact: bool = False) -> CoveringReport:
    """Covering numbers for every requested level and ε.

    A net for a smaller ε is also a net for a larger one, so each level's
    counts are made nonincreasing in ε by reusing the better net.
    """
    if not epsilons:
        raise ValueError("need at least one epsilon")
    eps = sorted(epsilons)
    if levels is None:
        levels = range(seq.start, seq.stop + 1)
    rows = []
    for n in levels:
        lm = seq.at(n)
        best = None
        per_level = []
        for e in eps:
            c = covering_number(lm, e, exact)
            if best is not None and best.n < c.n:
                c = Cover(best.n, best.net, best.method + "+smaller-eps")
            best = c
            per_level.append((e, n, c))
        rows.extend(per_level)
    rows.sort(key=lambda r: (r[0], r[1]))
    mode = "exact" if all(seq.at(n).exact for n in levels) else "float"
    return CoveringReport(tuple(rows), (min(levels), max(levels)), mode)


@dataclass(frozen=True)
class WidthReport:
    rows: tuple[tuple[int, int, float], ...]  # (level, width, max distance)
    initial_diameter: float

    @property
    def max_width(self) -> int:
        return max(w for _, w, _ in self.rows)

    @property
    def decays(self) -> bool:
        """Trend diagnostic: max distances heading to 0 relative to the initial diameter."""
        if self.initial_diameter == 0:
            return True
        return trend_verdict([d / self.initial_diameter for _, _, d in self.rows], 0.0, 0.05)

    def to_dict(self) -> dict:
        return {"max_width": self.max_width, "initial_diameter": self.initial_diameter,
                "decays_within_horizon": self.decays,
                "rows": [{"level": n, "width": w, "max_distance": d} for n, w, d in self.rows]}


def bounded_width_check(graph: GradedGraph, seq: InternalMetricSequence) -> WidthReport:
    rows = tuple((lm.level, graph.width(lm.level), float(lm.diameter())) for lm in seq)
    return WidthReport(rows, rows[0][2])


@dataclass(frozen=True)
class RegularSequence:
    vertices: tuple[tuple[int, int], ...]
    modulus: tuple[tuple[int, float], ...] = field(default=())

    @property
    def levels(self) -> tuple[int, int]:
        return self.vertices[0][0], self.vertices[-1][0]

    def modulus_at(self, M: int) -> float:
        for lvl, val in self.modulus:
            if lvl == M:
                return val
        raise GraphError(f"no modulus recorded at level {M}")


def _check_contiguous(vertices) -> None:
    lv = [n for n, _ in vertices]
    if not lv or lv != list(range(lv[0], lv[0] + len(lv))):
        raise GraphError("vertex sequence must have one vertex per level on a contiguous range")


def _projected_distances(seq: InternalMetricSequence, vertices) -> np.ndarray:
    """``out[a, b] = ρ_{n_a}(γ_a, p(γ_b))`` for ``a < b`` (float), where ``p`` projects down to level ``n_a``."""
    L = len(vertices)
    out = np.zeros((L, L))
    kernel = seq.kernel
    P = np.zeros((0, 0))
    for a in range(L - 1, -1, -1):
        n, g = vertices[a]
        if a < L - 1:
            P = P @ kernel.dense_float(n + 1).T
        rho = seq.at(n).as_float()
        if P.shape[0]:
            out[a, a + 1:] = P @ rho[g]
        row = np.zeros((1, kernel.widths[n]))
        row[0, g] = 1.0
        P = np.vstack([row, P]) if P.shape[0] else row
    return out


def cauchy_modulus(seq: InternalMetricSequence, vertices: Sequence[tuple[int, int]],
                   method: str = "projection") -> RegularSequence:
    """Cauchy modulus: for each ``M``, the sup of the distance between ``γ_m`` and ``γ_{m'}`` over ``M <= m < m'``.

    ``"projection"`` measures ``ρ_m(γ_m, p(γ_{m'}))``; ``"chain"`` uses the
    chain-minimum cross-level distance, which grows along interior sequences
    of Pascal-type graphs and is therefore much coarser.
    """
    vertices = tuple((int(n), int(v)) for n, v in vertices)
    _check_contiguous(vertices)
    L = len(vertices)
    if method == "projection":
        D = _projected_distances(seq, vertices)
    elif method == "chain":
        from .metric import cross_level_distance
        D = np.zeros((L, L))
        for a in range(L):
            for b in range(a + 1, L):
                D[a, b] = float(cross_level_distance(seq, vertices[a], vertices[b], "chain"))
    else:
        raise ValueError(f"unknown method {method!r}")
    rowmax = D.max(axis=1) if L else np.zeros(0)
    suffix = np.maximum.accumulate(rowmax[::-1])[::-1]
    modulus = tuple((vertices[a][0], float(suffix[a])) for a in range(L))
    return RegularSequence(vertices, modulus)


@dataclass(frozen=True)
class CauchyReport:
    sequences: tuple[RegularSequence, ...]
    cauchy: tuple[bool, ...]
    clusters: tuple[tuple[int, ...], ...]
    tail_start: int
    delta: float
    tail_distances: tuple[tuple[float, ...], ...]

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "tail_start": self.tail_start,
            "horizon": list(self.sequences[0].levels) if self.sequences else [],
            "note": "finite-horizon diagnostic",
            "cauchy": list(self.cauchy),
            "tail_modulus": [s.modulus_at(self.tail_start) for s in self.sequences],
            "clusters": [list(c) for c in self.clusters],
        }


def cauchy_classes(seq: InternalMetricSequence, candidates: Sequence[Sequence[tuple[int, int]]],
                   delta: float, tail_fraction: float = 0.5, method: str = "projection") -> CauchyReport:
    """Check each candidate for the Cauchy property and group them by tail distance.

    A candidate counts as Cauchy when its modulus at the start of the tail
    (the last ``tail_fraction`` of the range) is at most ``delta``.  Two
    candidates are linked when the largest same-level distance between them
    over the tail is below ``delta``; clusters are the connected components
    (single linkage, union-find over pairs in index order).
    """
    if not candidates:
        raise ValueError("no candidate sequences")
    seqs = [cauchy_modulus(seq, c, method) for c in candidates]
    rng = seqs[0].levels
    if any(s.levels != rng for s in seqs):
        raise GraphError("candidate sequences span different level ranges")
    lo, hi = rng
    tail_start = lo + int((hi - lo) * (1 - tail_fraction))
    cauchy = tuple(s.modulus_at(tail_start) <= delta for s in seqs)

    tail = range(tail_start, hi + 1)
    k = len(seqs)
    T = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            d = max(float(seq.at(n).matrix[seqs[i].vertices[n - lo][1], seqs[j].vertices[n - lo][1]])
                    for n in tail)
            T[i][j] = T[j][i] = d

    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(k):
        for j in range(i + 1, k):
            if T[i][j] < delta:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    clusters = tuple(tuple(g) for g in sorted(groups.values()))
    return CauchyReport(tuple(seqs), cauchy, clusters, tail_start, delta,
                        tuple(tuple(r) for r in T))
