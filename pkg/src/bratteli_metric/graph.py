"""Graded graphs (Bratteli diagrams), path counting, cotransitions and projections.

All arithmetic here is exact: path counts are Python integers and
cotransition probabilities are :class:`fractions.Fraction` values.

Layout convention: ``edges[n - 1]`` describes the matrix ``M_n`` of shape
``|level n-1| x |level n|``; rows are indexed by the lower level, columns by
the upper one.  A vertex is identified by ``(level, index)``; labels are
decorative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "GradedGraph",
    "Violation",
    "ValidationReport",
    "DimTable",
    "CotransitionKernel",
    "LevelDistribution",
    "GraphError",
    "validate",
    "dims",
    "cotransitions",
    "project",
    "project_to",
    "rarefy",
    "delta",
]


class GraphError(ValueError):
    """Raised for structurally unusable graphs or out-of-range requests."""


@dataclass(frozen=True)
class GradedGraph:
    levels: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[tuple[int, int, int], ...], ...]
    distinct_predecessors: bool = False
    metadata: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        levels = tuple(tuple(str(x) for x in lvl) for lvl in self.levels)
        if len(levels) < 1:
            raise GraphError("a graph needs at least the root level")
        if len(self.edges) != len(levels) - 1:
            raise GraphError(
                f"expected {len(levels) - 1} edge blocks, got {len(self.edges)}")
        blocks = []
        for n, block in enumerate(self.edges, start=1):
            lo, hi = len(levels[n - 1]), len(levels[n])
            norm = []
            for e in block:
                u, v, m = e
                if not (0 <= u < lo and 0 <= v < hi):
                    raise GraphError(f"edge ({u},{v}) out of range at level {n}")
                norm.append((int(u), int(v), m))
            blocks.append(tuple(sorted(norm)))
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "edges", tuple(blocks))

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def width(self, n: int) -> int:
        return len(self.levels[n])

    @cached_property
    def _preds(self):
        out = []
        for n, block in enumerate(self.edges, start=1):
            p = [[] for _ in range(len(self.levels[n]))]
            for u, v, m in block:
                if m:
                    p[v].append((u, m))
            out.append(tuple(tuple(x) for x in p))
        return tuple(out)

    @cached_property
    def _succs(self):
        out = []
        for n, block in enumerate(self.edges, start=1):
            s = [[] for _ in range(len(self.levels[n - 1]))]
            for u, v, m in block:
                if m:
                    s[u].append((v, m))
            out.append(tuple(tuple(x) for x in s))
        return tuple(out)

    def predecessors(self, n: int, v: int) -> tuple[tuple[int, int], ...]:
        """``(u, multiplicity)`` pairs for the level-``n`` vertex ``v``."""
        self._check_level(n, low=1)
        return self._preds[n - 1][v]

    def successors(self, n: int, u: int) -> tuple[tuple[int, int], ...]:
        """``(v, multiplicity)`` pairs at level ``n + 1`` for the level-``n`` vertex ``u``."""
        self._check_level(n + 1, low=1)
        return self._succs[n][u]

    def matrix(self, n: int) -> np.ndarray:
        """Dense ``M_n`` as an object array of Python ints."""
        self._check_level(n, low=1)
        M = np.zeros((self.width(n - 1), self.width(n)), dtype=object)
        M[:, :] = 0
        for u, v, m in self.edges[n - 1]:
            M[u, v] = m
        return M

    def truncate(self, depth: int) -> "GradedGraph":
        self._check_level(depth)
        return GradedGraph(self.levels[: depth + 1], self.edges[:depth],
                           self.distinct_predecessors, dict(self.metadata))

    def _check_level(self, n: int, low: int = 0) -> None:
        if not (low <= n <= self.depth):
            raise GraphError(f"level {n} outside [{low}, {self.depth}]")


@dataclass(frozen=True)
class Violation:
    level: int
    kind: str
    detail: str
    severity: str = "error"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    orientation: str = (
        "distinct-predecessor check compares columns of M_n "
        "(shape |level n-1| x |level n|), i.e. predecessor vectors of level-n vertices")

    @property
    def errors(self) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.severity == "error")

    @property
    def warnings(self) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.severity == "warning")

    @property
    def accepted(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "orientation": self.orientation,
            "violations": [v.__dict__ for v in self.violations],
        }


def validate(graph: GradedGraph) -> ValidationReport:
    """List every violated structural invariant, with level indices.

    Identical columns of ``M_n`` are reported as warnings unless the graph is
    flagged ``distinct_predecessors``, in which case they are errors.  Level 1
    is exempt: all its vertices hang off the root, and the metric iteration
    takes its level-1 metric as given rather than deriving it.
    """
    out: list[Violation] = []
    if graph.width(0) != 1:
        out.append(Violation(0, "root", f"level 0 has {graph.width(0)} vertices, expected 1"))
    for n, block in enumerate(graph.edges, start=1):
        for u, v, m in block:
            if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
                out.append(Violation(n, "non-integer-multiplicity", f"edge ({u},{v}) has {m!r}"))
            elif m < 0:
                out.append(Violation(n, "negative-multiplicity", f"edge ({u},{v}) has {m}"))
        seen = set()
        for u, v, _ in block:
            if (u, v) in seen:
                out.append(Violation(n, "duplicate-edge", f"edge ({u},{v}) listed twice"))
            seen.add((u, v))
        rows = {u for u, _, m in block if _positive(m)}
        cols = {v for _, v, m in block if _positive(m)}
        for u in range(graph.width(n - 1)):
            if u not in rows:
                out.append(Violation(n, "zero-row", f"vertex {u} of level {n - 1} has no successor"))
        for v in range(graph.width(n)):
            if v not in cols:
                out.append(Violation(n, "zero-column", f"vertex {v} of level {n} has no predecessor"))
        if n == 1:
            continue
        columns: dict[int, list] = {v: [] for v in range(graph.width(n))}
        for u, v, m in block:
            if _positive(m):
                columns[v].append((u, m))
        groups: dict[tuple, list[int]] = {}
        for v, col in columns.items():
            groups.setdefault(tuple(sorted(col)), []).append(v)
        for key, vs in groups.items():
            if len(vs) > 1 and key:
                out.append(Violation(
                    n, "identical-predecessors",
                    f"vertices {vs} of level {n} have identical columns in M_{n}",
                    "error" if graph.distinct_predecessors else "warning"))
    return ValidationReport(tuple(out))


def _positive(m) -> bool:
    try:
        return m > 0
    except TypeError:
        return False


@dataclass(frozen=True)
class DimTable:
    """Number of multiplicity-weighted root-to-vertex paths, per level."""

    values: tuple[tuple[int, ...], ...]

    def __getitem__(self, n: int) -> tuple[int, ...]:
        return self.values[n]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def depth(self) -> int:
        return len(self.values) - 1


def dims(graph: GradedGraph, up_to_level: int | None = None) -> DimTable:
    if up_to_level is None:
        up_to_level = graph.depth
    if not (0 <= up_to_level <= graph.depth):
        raise GraphError(f"level {up_to_level} outside [0, {graph.depth}]")
    table = [(1,) * graph.width(0)]
    for n in range(1, up_to_level + 1):
        prev = table[-1]
        table.append(tuple(
            sum(m * prev[u] for u, m in graph.predecessors(n, v))
            for v in range(graph.width(n))))
    return DimTable(tuple(table))


@dataclass(frozen=True)
class CotransitionKernel:
    """Backward transition probabilities ``λ(u | v)`` for every vertex above the root.

    ``rows[n - 1][v]`` is a tuple of ``(u, λ)`` pairs over predecessors of the
    level-``n`` vertex ``v``, sorted by ``u``.
    """

    rows: tuple[tuple[tuple[tuple[int, Fraction], ...], ...], ...]
    widths: tuple[int, ...]
    central: bool = True

    @property
    def depth(self) -> int:
        return len(self.rows)

    def row(self, n: int, v: int) -> tuple[tuple[int, Fraction], ...]:
        if not (1 <= n <= self.depth):
            raise GraphError(f"kernel has no level {n}")
        return self.rows[n - 1][v]

    def dense(self, n: int) -> np.ndarray:
        """Object array ``L`` with ``L[u, v] = λ(u | v)``, shape ``|n-1| x |n|``."""
        L = np.empty((self.widths[n - 1], self.widths[n]), dtype=object)
        L[:, :] = Fraction(0)
        for v, row in enumerate(self.rows[n - 1]):
            for u, lam in row:
                L[u, v] = lam
        return L

    @cached_property
    def _dense_float(self) -> dict:
        return {}

    def dense_float(self, n: int) -> np.ndarray:
        """Float version of :meth:`dense`; cached and read-only."""
        L = self._dense_float.get(n)
        if L is None:
            L = np.zeros((self.widths[n - 1], self.widths[n]))
            for v, row in enumerate(self.rows[n - 1]):
                for u, lam in row:
                    L[u, v] = float(lam)
            L.setflags(write=False)
            self._dense_float[n] = L
        return L

    @cached_property
    def _csr(self):
        out = []
        for level in self.rows:
            indptr = [0]
            indices, weights = [], []
            for row in level:
                for u, lam in row:
                    indices.append(u)
                    weights.append(float(lam))
                indptr.append(len(indices))
            out.append((np.asarray(indptr, dtype=np.int64),
                        np.asarray(indices, dtype=np.int64),
                        np.asarray(weights, dtype=np.float64)))
        return tuple(out)

    def csr(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Float CSR triple ``(indptr, indices, weights)`` of level ``n``'s rows."""
        return self._csr[n - 1]


def cotransitions(graph: GradedGraph, dim_table: DimTable | None = None,
                  override: Sequence[Sequence[Mapping[int, object]]] | None = None
                  ) -> CotransitionKernel:
    """Central cocycle ``λ(u|v) = m(u,v) dim(u) / dim(v)``, or a validated user cocycle.

    ``override[n - 1][v]`` maps predecessor index to probability.  Its support
    must equal the adjacency support and each row must sum to exactly 1.
    """
    widths = tuple(graph.width(n) for n in range(graph.depth + 1))
    if override is None:
        if dim_table is None:
            dim_table = dims(graph)
        if dim_table.depth < graph.depth:
            raise GraphError("dim table shorter than graph")
        rows = []
        for n in range(1, graph.depth + 1):
            level = []
            for v in range(graph.width(n)):
                total = dim_table[n][v]
                level.append(tuple(
                    (u, Fraction(m * dim_table[n - 1][u], total))
                    for u, m in graph.predecessors(n, v)))
            rows.append(tuple(level))
        return CotransitionKernel(tuple(rows), widths, central=True)

    if len(override) != graph.depth:
        raise GraphError(f"override covers {len(override)} levels, graph has {graph.depth}")
    rows = []
    for n in range(1, graph.depth + 1):
        if len(override[n - 1]) != graph.width(n):
            raise GraphError(f"override level {n} has wrong width")
        level = []
        for v in range(graph.width(n)):
            given = {int(u): Fraction(p) for u, p in override[n - 1][v].items() if Fraction(p) != 0}
            support = {u for u, _ in graph.predecessors(n, v)}
            if set(given) != support:
                raise GraphError(
                    f"override support at level {n} vertex {v} is {sorted(given)}, "
                    f"adjacency support is {sorted(support)}")
            if any(p < 0 for p in given.values()):
                raise GraphError(f"negative cotransition at level {n} vertex {v}")
            if sum(given.values()) != 1:
                raise GraphError(f"override row at level {n} vertex {v} sums to {sum(given.values())}")
            level.append(tuple(sorted(given.items())))
        rows.append(tuple(level))
    return CotransitionKernel(tuple(rows), widths, central=False)


@dataclass(frozen=True)
class LevelDistribution:
    level: int
    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(Fraction(x) for x in self.values)
        if any(x < 0 for x in vals):
            raise ValueError("negative mass in level distribution")
        if sum(vals) != 1:
            raise ValueError(f"level distribution sums to {sum(vals)}, not 1")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> Fraction:
        return self.values[i]


def delta(level: int, width: int, vertex: int) -> LevelDistribution:
    vals = [Fraction(0)] * width
    vals[vertex] = Fraction(1)
    return LevelDistribution(level, tuple(vals))


def _project_values(values: Sequence[Fraction], kernel: CotransitionKernel, n: int) -> list[Fraction]:
    out = [Fraction(0)] * kernel.widths[n - 1]
    for v, mass in enumerate(values):
        if not mass:
            continue
        for u, lam in kernel.rows[n - 1][v]:
            out[u] += mass * lam
    return out


def project(dist: LevelDistribution, kernel: CotransitionKernel) -> LevelDistribution:
    """Push a level-``n`` distribution to level ``n - 1`` through the cocycle."""
    n = dist.level
    if n < 1:
        raise GraphError("cannot project below the root")
    if n > kernel.depth or len(dist) != kernel.widths[n]:
        raise GraphError(f"distribution of width {len(dist)} does not match kernel level {n}")
    return LevelDistribution(n - 1, tuple(_project_values(dist.values, kernel, n)))


def project_to(dist: LevelDistribution, kernel: CotransitionKernel, m: int) -> LevelDistribution:
    """Composite projection ``p_{n,m}`` for ``m <= n``."""
    if m > dist.level or m < 0:
        raise GraphError(f"cannot project level {dist.level} to level {m}")
    while dist.level > m:
        dist = project(dist, kernel)
    return dist


def rarefy(graph: GradedGraph, kept_levels: Iterable[int]) -> GradedGraph:
    """Drop levels, composing the skipped adjacency matrices into multiplicities."""
    kept = list(kept_levels)
    if not kept:
        raise GraphError("kept_levels is empty")
    if kept[0] != 0:
        raise GraphError("kept_levels must start with 0")
    if any(b <= a for a, b in zip(kept, kept[1:])):
        raise GraphError("kept_levels must be strictly increasing")
    if kept[-1] > graph.depth:
        raise GraphError(f"level {kept[-1]} beyond depth {graph.depth}")
    blocks = []
    for lo, hi in zip(kept, kept[1:]):
        # sparse row-vector products: acc[u] maps level-k vertex -> multiplicity
        acc = [{u: 1} for u in range(graph.width(lo))]
        for k in range(lo + 1, hi + 1):
            nxt = []
            for row in acc:
                d: dict[int, int] = {}
                for w, a in row.items():
                    for v, m in graph.successors(k - 1, w):
                        d[v] = d.get(v, 0) + a * m
                nxt.append(d)
            acc = nxt
        blocks.append(tuple((u, v, m) for u, row in enumerate(acc) for v, m in sorted(row.items()) if m))
    meta = dict(graph.metadata)
    meta["rarefied_from_levels"] = kept
    return GradedGraph(tuple(graph.levels[k] for k in kept), tuple(blocks),
                       graph.distinct_predecessors, meta)
