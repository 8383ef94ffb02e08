"""Central measures as coherent level distributions, and finite-horizon tests of extremality and standardness."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .compactness import trend_verdict
from .graph import (CotransitionKernel, GradedGraph, GraphError, LevelDistribution,
                    _project_values, cotransitions)
from .metric import InternalMetricSequence, distance_to_vertices, projection_matrix
from .transport import kantorovich

__all__ = [
    "CentralityError",
    "IncoherentMeasureError",
    "CentralMeasure",
    "from_forward_kernel",
    "from_levels",
    "mixture",
    "ExtremalityReport",
    "extremality_check",
    "standardness_distance_profile",
    "concentration_profile",
    "martingale_profile",
    "TREND_TOL",
]

TREND_TOL = 0.05
BALL_TOL = 1e-9


class CentralityError(ValueError):
    """A forward kernel whose induced cotransitions differ from the graph's cocycle."""


class IncoherentMeasureError(ValueError):
    """Level distributions that are not related by projection."""

    def __init__(self, level: int, message: str):
        super().__init__(message)
        self.level = level


@dataclass(frozen=True)
class CentralMeasure:
    levels: tuple[LevelDistribution, ...]  # levels[n] lives on level n, n = 0..depth
    kernel: CotransitionKernel
    forward: tuple | None = None

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def at(self, n: int) -> LevelDistribution:
        if not 0 <= n <= self.depth:
            raise GraphError(f"measure has no level {n}")
        return self.levels[n]

    def to_json(self) -> dict:
        out: dict = {"levels": [[str(x) for x in d.values] for d in self.levels]}
        if self.forward is not None:
            out["forward_kernel"] = [[{str(v): str(p) for v, p in sorted(row.items())} for row in lvl]
                                     for lvl in self.forward]
        return out


def from_forward_kernel(graph: GradedGraph, kernel: CotransitionKernel | None,
                        fwd: Sequence[Sequence[Mapping[int, object]]]) -> CentralMeasure:
    """Propagate ``δ_root`` through ``fwd[n][u] = {v: P(v | u)}`` and check centrality on every edge."""
    if kernel is None:
        kernel = cotransitions(graph)
    depth = len(fwd)
    if depth > graph.depth:
        raise GraphError(f"forward kernel has {depth} levels, graph only {graph.depth}")
    clean = []
    mu = [Fraction(1)]
    levels = [LevelDistribution(0, (Fraction(1),))]
    for n in range(depth):
        if len(fwd[n]) != graph.width(n):
            raise GraphError(f"forward kernel level {n} has {len(fwd[n])} rows, level has {graph.width(n)}")
        nxt = [Fraction(0)] * graph.width(n + 1)
        lvl = []
        for u, row in enumerate(fwd[n]):
            row = {int(v): Fraction(p) for v, p in row.items()}
            succ = {v for v, _ in graph.successors(n, u)}
            extra = set(row) - succ
            if extra:
                raise GraphError(f"forward kernel at level {n} vertex {u} leaves the graph: {sorted(extra)}")
            if any(p < 0 for p in row.values()) or sum(row.values()) != 1:
                raise GraphError(f"forward kernel row at level {n} vertex {u} is not a probability vector")
            for v, p in row.items():
                nxt[v] += mu[u] * p
            lvl.append(row)
        for v in range(graph.width(n + 1)):
            for u, lam in kernel.row(n + 1, v):
                lhs = mu[u] * lvl[u].get(v, Fraction(0))
                rhs = nxt[v] * lam
                if lhs != rhs:
                    raise CentralityError(
                        f"centrality fails on edge level {n} vertex {u} -> level {n + 1} vertex {v}: "
                        f"mu_n(u)*P(v|u) = {lhs} but mu_(n+1)(v)*lambda(u|v) = {rhs}")
        clean.append(tuple(lvl))
        mu = nxt
        levels.append(LevelDistribution(n + 1, tuple(nxt)))
    return CentralMeasure(tuple(levels), kernel, tuple(clean))


def from_levels(kernel: CotransitionKernel, dists: Sequence[Sequence[object]]) -> CentralMeasure:
    """Build from explicit distributions ``dists[n]`` on levels ``0..N``; coherence is checked exactly."""
    levels = []
    for n, vals in enumerate(dists):
        if n > kernel.depth or len(vals) != kernel.widths[n]:
            raise IncoherentMeasureError(n, f"level {n} has {len(vals)} entries, graph level has "
                                            f"{kernel.widths[n] if n <= kernel.depth else 'no vertices'}")
        try:
            levels.append(LevelDistribution(n, tuple(Fraction(x) for x in vals)))
        except ValueError as exc:
            raise IncoherentMeasureError(n, f"level {n}: {exc}") from None
    if not levels:
        raise IncoherentMeasureError(0, "no levels given")
    for n in range(1, len(levels)):
        down = _project_values(levels[n].values, kernel, n)
        if tuple(down) != levels[n - 1].values:
            raise IncoherentMeasureError(n, f"projection of level {n} does not equal level {n - 1}")
    return CentralMeasure(tuple(levels), kernel)


def mixture(measures: Sequence[CentralMeasure], weights: Sequence[object]) -> CentralMeasure:
    if len(measures) != len(weights) or not measures:
        raise ValueError("need one weight per measure")
    w = [Fraction(x) for x in weights]
    if any(x < 0 for x in w) or sum(w) != 1:
        raise ValueError("weights must be a probability vector")
    depth = measures[0].depth
    if any(m.depth != depth for m in measures):
        raise ValueError("measures span different level ranges")
    levels = []
    for n in range(depth + 1):
        vals = [sum((wi * m.levels[n].values[v] for wi, m in zip(w, measures)), Fraction(0))
                for v in range(len(measures[0].levels[n]))]
        levels.append(LevelDistribution(n, tuple(vals)))
    return CentralMeasure(tuple(levels), measures[0].kernel)


def _uses_exact(seq: InternalMetricSequence, *levels: int) -> bool:
    return all(seq.at(n).exact for n in levels)


@dataclass(frozen=True)
class ExtremalityReport:
    # (n, m, epsilon, tv_mass, internal_mass)
    rows: tuple[tuple[int, int, float, float, float], ...]
    trend_tol: float = TREND_TOL

    def _verdict(self, col: int) -> bool:
        keys = sorted({(n, e) for n, _, e, _, _ in self.rows})
        for n, e in keys:
            series = [r[col] for r in sorted(self.rows, key=lambda r: r[1]) if r[0] == n and r[2] == e]
            if not trend_verdict(series, 1.0, self.trend_tol):
                return False
        return True

    @property
    def consistent(self) -> bool:
        """Total-variation masses trend to 1 for every tested (n, ε)."""
        return self._verdict(3)

    @property
    def consistent_internal(self) -> bool:
        return self._verdict(4)

    def mass(self, n: int, m: int, epsilon, ball: str = "tv") -> float:
        for r in self.rows:
            if r[0] == n and r[1] == m and r[2] == epsilon:
                return r[3] if ball == "tv" else r[4]
        raise KeyError((n, m, epsilon))

    def to_dict(self) -> dict:
        return {
            "verdict": "consistent with extremality" if self.consistent else "not consistent with extremality",
            "verdict_internal_metric": self.consistent_internal,
            "trend_tolerance": self.trend_tol,
            "note": "finite-horizon diagnostic",
            "rows": [{"n": n, "m": m, "epsilon": str(e) if isinstance(e, Fraction) else e,
                      "tv_mass": tv, "internal_mass": im}
                     for n, m, e, tv, im in self.rows],
        }


def extremality_check(measure: CentralMeasure, seq: InternalMetricSequence, epsilons: Sequence,
                      pairs: Sequence[tuple[int, int]]) -> ExtremalityReport:
    """How much ``μ_m``-mass of level-``m`` vertices projects into the ε-ball around ``μ_n``.

    Each vertex ``γ`` of level ``m`` is pushed down to ``p_{m,n}(δ_γ)``; the
    mass is reported for total-variation balls (half the L1 distance) and for
    balls in the transport metric built on ``ρ_n``.
    """
    rows = []
    for n, m in pairs:
        if not (0 <= n < m <= measure.depth) or m > seq.kernel.depth:
            raise GraphError(f"invalid level pair ({n}, {m})")
        seq.at(n)
        exact = _uses_exact(seq, n) and m <= 100
        mu_m = measure.at(m).values
        support = [g for g, x in enumerate(mu_m) if x]
        P = projection_matrix(seq.kernel, m, n, support, exact)
        x_n = measure.at(n).values
        rho = seq.at(n)
        if exact:
            tv = [sum((abs(P[r, u] - x_n[u]) for u in range(len(x_n))), Fraction(0)) / 2
                  for r in range(len(support))]
            ki = [kantorovich(list(P[r]), x_n, rho, "exact")[0] for r in range(len(support))]
        else:
            xf = np.array([float(t) for t in x_n])
            tv = list(0.5 * np.abs(P - xf).sum(axis=1))
            ki = [kantorovich(P[r] / P[r].sum(), xf, rho.as_float(), "float")[0] for r in range(len(support))]
        for e in epsilons:
            if exact:
                eq = Fraction(e).limit_denominator(10**12) if isinstance(e, float) else Fraction(e)
                tv_mass = sum((mu_m[g] for g, d in zip(support, tv) if d <= eq), Fraction(0))
                in_mass = sum((mu_m[g] for g, d in zip(support, ki) if d <= eq), Fraction(0))
            else:
                tv_mass = sum(float(mu_m[g]) for g, d in zip(support, tv) if d <= e + BALL_TOL)
                in_mass = sum(float(mu_m[g]) for g, d in zip(support, ki) if d <= e + BALL_TOL)
            rows.append((n, m, e, float(tv_mass), float(in_mass)))
    return ExtremalityReport(tuple(rows))


def _metric_levels(measure: CentralMeasure, seq: InternalMetricSequence, levels):
    if levels is None:
        levels = range(max(seq.start, 1), min(seq.stop, measure.depth) + 1)
    return list(levels)


def standardness_distance_profile(measure: CentralMeasure, seq: InternalMetricSequence,
                                  levels: Sequence[int] | None = None) -> tuple[tuple[int, float, int], ...]:
    """Per level: ``(n, ρ_n(μ_n, nearest vertex), that vertex)``."""
    out = []
    for n in _metric_levels(measure, seq, levels):
        val, g = distance_to_vertices(measure.at(n), seq.at(n))
        out.append((n, float(val), g))
    return tuple(out)


def concentration_profile(measure: CentralMeasure, seq: InternalMetricSequence, epsilons: Sequence,
                          centers: Sequence[tuple[int, int]] | None = None
                          ) -> tuple[tuple[int, float, float], ...]:
    """``μ_n``-mass of the ε-ball around the nearest vertex ``γ_n`` (or the given centers)."""
    if centers is None:
        centers = [(n, g) for n, _, g in standardness_distance_profile(measure, seq)]
    out = []
    for n, g in centers:
        lm = seq.at(n)
        mu = measure.at(n).values
        for e in epsilons:
            if lm.exact:
                eq = Fraction(e).limit_denominator(10**12) if isinstance(e, float) else Fraction(e)
                mass = sum((mu[v] for v in range(len(mu)) if mu[v] and lm.matrix[g, v] <= eq), Fraction(0))
            else:
                mass = sum(float(mu[v]) for v in range(len(mu)) if mu[v] and lm.matrix[g, v] <= e + BALL_TOL)
            out.append((n, e, float(mass)))
    return tuple(out)


@dataclass(frozen=True)
class MartingaleProfile:
    rows: tuple[tuple[int, float, str], ...]  # (n, value, "exact" | "sampled")
    form: str
    seed: int | None

    def to_dict(self) -> dict:
        return {"form": self.form, "seed": self.seed,
                "rows": [{"n": n, "value": v, "method": how} for n, v, how in self.rows]}


def martingale_profile(measure: CentralMeasure, seq: InternalMetricSequence, sample_size: int = 10_000,
                       seed: int = 0, form: str = "pairwise", max_exact_pairs: int = 250_000,
                       levels: Sequence[int] | None = None) -> MartingaleProfile:
    """How far apart the conditional laws of level ``n`` are given level ``n + 1``.

    Given ``γ`` at level ``n + 1`` the level-``n`` conditional law is the
    cotransition row ``λ(·|γ)``.  ``form="pairwise"`` returns
    ``E ρ_n-transport(λ(·|γ), λ(·|γ'))`` for independent ``γ, γ' ~ μ_{n+1}``,
    which equals ``E ρ_{n+1}(γ, γ')``.  ``form="mean"`` returns
    ``E ρ_n-transport(λ(·|γ), μ_n)``.  Large levels are sampled with a seeded
    generator.
    """
    if form not in ("pairwise", "mean"):
        raise ValueError(f"unknown form {form!r}")
    if levels is None:
        top = min(seq.stop, measure.depth) - 1
        levels = range(max(seq.start, 1), top + 1)
    rng = np.random.default_rng(seed)
    used_sampling = False
    rows = []
    for n in levels:
        mu = measure.at(n + 1).values
        support = [g for g, x in enumerate(mu) if x]
        w = np.array([float(mu[g]) for g in support])
        if form == "pairwise":
            lm = seq.at(n + 1)
            if len(support) ** 2 <= max_exact_pairs:
                if lm.exact:
                    val = sum((mu[a] * mu[b] * lm.matrix[a, b] for a in support for b in support if a != b),
                              Fraction(0))
                else:
                    sub = lm.matrix[np.ix_(support, support)]
                    val = float(w @ sub @ w)
                rows.append((n, float(val), "exact"))
            else:
                used_sampling = True
                i = rng.choice(support, size=sample_size, p=w / w.sum())
                j = rng.choice(support, size=sample_size, p=w / w.sum())
                rows.append((n, float(np.mean(lm.as_float()[i, j])), "sampled"))
        else:
            lm = seq.at(n)
            exact = lm.exact and len(support) <= 200
            mode = "exact" if exact else "float"
            target = measure.at(n).values if exact else [float(t) for t in measure.at(n).values]

            def cond(g):
                row = [Fraction(0)] * len(target)
                for u, lam in seq.kernel.row(n + 1, g):
                    row[u] = lam
                return row if exact else [float(t) for t in row]

            if len(support) <= sample_size:
                vals = [kantorovich(cond(g), target, lm, mode)[0] for g in support]
                val = sum((mu[g] * v for g, v in zip(support, vals)), Fraction(0)) if exact \
                    else float(np.dot(w, vals))
                rows.append((n, float(val), "exact"))
            else:
                used_sampling = True
                draws = rng.choice(support, size=sample_size, p=w / w.sum())
                rows.append((n, float(np.mean([kantorovich(cond(g), target, lm, "float")[0] for g in draws])),
                             "sampled"))
    return MartingaleProfile(tuple(rows), form, seed if used_sampling else None)
