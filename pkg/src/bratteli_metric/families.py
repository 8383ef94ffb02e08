"""Generators for the standard example graphs and test fixtures."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from math import comb
from typing import Sequence

from .graph import GradedGraph, GraphError

__all__ = [
    "FamilySpec",
    "ResourceBoundError",
    "build",
    "pascal",
    "young",
    "unordered_pairs",
    "chain",
    "stationary",
    "random_graded",
    "bernoulli_kernel",
    "compositions",
    "partitions",
]

ROOT = "∅"
FAMILIES = ("pascal", "young", "unordered-pairs", "chain", "stationary")


class ResourceBoundError(RuntimeError):
    """A requested graph would exceed a configured size bound."""


def compositions(n: int, d: int) -> list[tuple[int, ...]]:
    """Weak compositions of ``n`` into ``d`` parts, in lexicographic order."""
    if d == 1:
        return [(n,)]
    return [(k,) + rest for k in range(n + 1) for rest in compositions(n - k, d - 1)]


def partitions(n: int) -> list[tuple[int, ...]]:
    """Partitions of ``n`` in reverse lexicographic order, ``(n)`` first."""
    out = []

    def rec(remaining, cap, prefix):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for k in range(min(remaining, cap), 0, -1):
            rec(remaining - k, k, prefix + [k])

    rec(n, n, [])
    return out


def _check_depth(depth: int) -> None:
    if depth < 1:
        raise GraphError("depth must be >= 1")


def pascal(d: int, depth: int) -> GradedGraph:
    """The lattice Z_+^d graded by coordinate sum, truncated at ``depth``."""
    if d < 2:
        raise GraphError("pascal graph needs d >= 2")
    _check_depth(depth)
    levels = [compositions(n, d) for n in range(depth + 1)]
    edges = []
    for n in range(1, depth + 1):
        index = {c: k for k, c in enumerate(levels[n])}
        block = []
        for u, c in enumerate(levels[n - 1]):
            for i in range(d):
                up = c[:i] + (c[i] + 1,) + c[i + 1:]
                block.append((u, index[up], 1))
        edges.append(block)
    labels = [[",".join(map(str, c)) for c in lvl] for lvl in levels]
    return GradedGraph(labels, edges, distinct_predecessors=True,
                       metadata={"family": "pascal", "d": d, "depth": depth})


def young(depth: int = 12) -> GradedGraph:
    """Young's lattice of partitions; an edge adds one box.

    Not flagged distinct-predecessors: ``(2)`` and ``(1,1)`` share the single
    predecessor ``(1)``, so validation warns at level 2 and the internal
    metric puts them at distance 0.
    """
    _check_depth(depth)
    levels = [partitions(n) for n in range(depth + 1)]
    edges = []
    for n in range(1, depth + 1):
        index = {p: k for k, p in enumerate(levels[n])}
        block = []
        for u, p in enumerate(levels[n - 1]):
            rows = list(p) + [0]
            for i in range(len(rows)):
                if i == 0 or rows[i] < rows[i - 1]:
                    grown = rows[:]
                    grown[i] += 1
                    block.append((u, index[tuple(x for x in grown if x)], 1))
        edges.append(block)
    labels = [[",".join(map(str, p)) if p else ROOT for p in lvl] for lvl in levels]
    return GradedGraph(labels, edges, metadata={"family": "young", "depth": depth})


def unordered_pairs(seed_size: int = 4, depth: int = 4, include_equal: bool = False,
                    max_level_size: int = 100_000) -> GradedGraph:
    """Each level consists of the unordered pairs of vertices of the previous one.

    Level 1 holds ``seed_size`` vertices under the root.  With
    ``include_equal`` the pairs ``{a, a}`` are included and joined to ``a``
    by a double edge.
    """
    if seed_size < 2:
        raise GraphError("seed_size must be >= 2")
    _check_depth(depth)
    sizes = [1, seed_size]
    for _ in range(2, depth + 1):
        k = sizes[-1]
        sizes.append(comb(k + 1, 2) if include_equal else comb(k, 2))
        if sizes[-1] > max_level_size:
            raise ResourceBoundError(
                f"level {len(sizes) - 1} would have {sizes[-1]} vertices (bound {max_level_size})")
    levels = [[ROOT], [str(i) for i in range(seed_size)]]
    edges = [[(0, v, 1) for v in range(seed_size)]]
    for n in range(2, depth + 1):
        k = len(levels[-1])
        pairs = list(combinations_with_replacement(range(k), 2) if include_equal
                     else combinations(range(k), 2))
        block = []
        for v, (a, b) in enumerate(pairs):
            if a == b:
                block.append((a, v, 2))
            else:
                block.append((a, v, 1))
                block.append((b, v, 1))
        levels.append([f"{a}|{b}" for a, b in pairs])
        edges.append(block)
    return GradedGraph(levels, edges, distinct_predecessors=not include_equal,
                       metadata={"family": "unordered-pairs", "seed_size": seed_size,
                                 "depth": depth, "include_equal": include_equal})


def chain(depth: int) -> GradedGraph:
    _check_depth(depth)
    levels = [[ROOT]] + [[str(n)] for n in range(1, depth + 1)]
    edges = [[(0, 0, 1)] for _ in range(depth)]
    return GradedGraph(levels, edges, metadata={"family": "chain", "depth": depth})


def stationary(kernel: Sequence[Sequence[int]], depth: int) -> GradedGraph:
    """Every level carries the same vertex set and adjacency ``kernel``."""
    _check_depth(depth)
    M = [[int(x) for x in row] for row in kernel]
    w = len(M)
    if w == 0 or any(len(row) != w for row in M):
        raise GraphError("stationary kernel must be a nonempty square matrix")
    if any(x < 0 for row in M for x in row):
        raise GraphError("stationary kernel has negative entries")
    if any(not any(row) for row in M) or any(not any(M[i][j] for i in range(w)) for j in range(w)):
        raise GraphError("stationary kernel has a zero row or column")
    levels = [[ROOT]] + [[str(i) for i in range(w)] for _ in range(depth)]
    block = [(i, j, M[i][j]) for i in range(w) for j in range(w) if M[i][j]]
    edges = [[(0, j, 1) for j in range(w)]] + [block for _ in range(depth - 1)]
    cols = {tuple(M[i][j] for i in range(w)) for j in range(w)}
    return GradedGraph(levels, edges, distinct_predecessors=len(cols) == w,
                       metadata={"family": "stationary", "kernel": M, "depth": depth})


def random_graded(rng: random.Random, max_width: int, depth: int,
                  max_mult: int = 2, density: float = 0.5) -> GradedGraph:
    """Random graph with no zero rows or columns, for property tests."""
    _check_depth(depth)
    widths = [1] + [rng.randint(1, max_width) for _ in range(depth)]
    edges = []
    for n in range(1, depth + 1):
        lo, hi = widths[n - 1], widths[n]
        cells = {(u, v): rng.randint(1, max_mult)
                 for u in range(lo) for v in range(hi) if rng.random() < density}
        for v in range(hi):
            if not any((u, v) in cells for u in range(lo)):
                cells[(rng.randrange(lo), v)] = rng.randint(1, max_mult)
        for u in range(lo):
            if not any((u, v) in cells for v in range(hi)):
                cells[(u, rng.randrange(hi))] = rng.randint(1, max_mult)
        edges.append([(u, v, m) for (u, v), m in sorted(cells.items())])
    levels = [[ROOT]] + [[str(i) for i in range(w)] for w in widths[1:]]
    return GradedGraph(levels, edges, metadata={"family": "random", "depth": depth})


def bernoulli_kernel(graph: GradedGraph, p) -> list[list[dict[int, Fraction]]]:
    """Forward kernel of the i.i.d. measure on a Pascal graph.

    ``p`` is either a scalar (probability of incrementing the first
    coordinate when ``d = 2``) or a length-``d`` probability vector.
    """
    if graph.metadata.get("family") != "pascal":
        raise GraphError("bernoulli_kernel needs a pascal graph")
    d = int(graph.metadata["d"])
    if isinstance(p, (list, tuple)):
        probs = [Fraction(x) for x in p]
    else:
        q = Fraction(p)
        probs = [q, 1 - q] if d == 2 else None
        if probs is None:
            raise GraphError("scalar p is only meaningful for d = 2")
    if len(probs) != d or sum(probs) != 1 or any(x < 0 for x in probs):
        raise GraphError(f"invalid coordinate probabilities {probs}")
    fwd = []
    for n in range(graph.depth):
        coords = [tuple(int(t) for t in lab.split(",")) for lab in graph.levels[n + 1]]
        index = {c: k for k, c in enumerate(coords)}
        level = []
        for lab in graph.levels[n]:
            c = tuple(int(t) for t in lab.split(","))
            row: dict[int, Fraction] = {}
            for i in range(d):
                if probs[i]:
                    row[index[c[:i] + (c[i] + 1,) + c[i + 1:]]] = probs[i]
            level.append(row)
        fwd.append(level)
    return fwd


@dataclass(frozen=True)
class FamilySpec:
    name: str
    depth: int
    d: int = 2
    seed_size: int = 4
    include_equal: bool = False
    kernel: tuple[tuple[int, ...], ...] | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.name not in FAMILIES:
            raise GraphError(f"unknown family {self.name!r}; choose from {FAMILIES}")
        _check_depth(self.depth)


def build(spec: FamilySpec) -> GradedGraph:
    if spec.name == "pascal":
        return pascal(spec.d, spec.depth)
    if spec.name == "young":
        return young(spec.depth)
    if spec.name == "unordered-pairs":
        return unordered_pairs(spec.seed_size, spec.depth, spec.include_equal,
                               **{k: v for k, v in spec.extra.items() if k == "max_level_size"})
    if spec.name == "chain":
        return chain(spec.depth)
    if spec.kernel is None:
        raise GraphError("stationary family needs a kernel matrix")
    return stationary(spec.kernel, spec.depth)
