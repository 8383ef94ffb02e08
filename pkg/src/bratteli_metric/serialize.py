"""File formats: graph JSON, CSV tables, measure JSON.

Exact values are written as fraction strings (``"p/q"`` or an integer);
floats use ``repr`` so files round-trip and stay byte-stable.
"""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .graph import CotransitionKernel, DimTable, GradedGraph, GraphError
from .transport import TransportPlan

__all__ = [
    "graph_to_json",
    "graph_from_json",
    "load_graph",
    "save_graph",
    "dims_csv",
    "kernel_csv",
    "plan_csv",
    "metric_csv",
    "measure_from_json",
    "load_measure",
    "dumps",
    "write_text",
    "fmt",
]


def fmt(x) -> str:
    if isinstance(x, (Fraction, int)):
        return str(x)
    return repr(float(x))


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _reject_duplicate_keys(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise GraphError(f"duplicate key {k!r} in JSON object")
        out[k] = v
    return out


def graph_to_json(graph: GradedGraph) -> dict:
    return {
        "levels": [list(lvl) for lvl in graph.levels],
        "edges": [[{"from": u, "to": v, "mult": m} for u, v, m in block] for block in graph.edges],
        "distinct_predecessors": graph.distinct_predecessors,
        "metadata": dict(graph.metadata),
    }


def graph_from_json(obj: dict) -> GradedGraph:
    if not isinstance(obj, dict) or "levels" not in obj or "edges" not in obj:
        raise GraphError("graph JSON needs 'levels' and 'edges'")
    levels = obj["levels"]
    edges = obj["edges"]
    if len(edges) != len(levels) - 1:
        raise GraphError(f"{len(levels)} levels need {len(levels) - 1} edge blocks, got {len(edges)}")
    blocks = []
    for n, block in enumerate(edges, start=1):
        seen = set()
        out = []
        for e in block:
            try:
                u, v, m = e["from"], e["to"], e["mult"]
            except (KeyError, TypeError):
                raise GraphError(f"edge block {n}: malformed edge {e!r}") from None
            if (u, v) in seen:
                raise GraphError(f"edge block {n}: duplicate edge ({u},{v})")
            seen.add((u, v))
            out.append((u, v, m))
        blocks.append(out)
    return GradedGraph(levels, blocks, distinct_predecessors=bool(obj.get("distinct_predecessors", False)),
                       metadata=obj.get("metadata", {}))


def load_graph(path) -> GradedGraph:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh, object_pairs_hook=_reject_duplicate_keys)
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}: not valid JSON ({exc})") from None
    return graph_from_json(obj)


def save_graph(graph: GradedGraph, path) -> None:
    write_text(Path(path), dumps(graph_to_json(graph)))


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def dims_csv(table: DimTable) -> str:
    return _csv(["level", "vertex", "value"],
                ((n, v, d) for n, lvl in enumerate(table.values) for v, d in enumerate(lvl)))


def kernel_csv(kernel: CotransitionKernel) -> str:
    return _csv(["level", "vertex", "predecessor", "value"],
                ((n, v, u, fmt(lam)) for n, lvl in enumerate(kernel.rows, start=1)
                 for v, row in enumerate(lvl) for u, lam in row))


def plan_csv(plan: TransportPlan) -> str:
    return _csv(["i", "j", "mass"], plan.csv_rows())


def metric_csv(metric) -> str:
    return _csv(["level", "u", "v", "distance"], metric.csv_rows())


def measure_from_json(obj: dict, graph: GradedGraph, kernel: CotransitionKernel | None = None):
    """Parse ``{"levels": [...], "forward_kernel": [...]}``; the forward kernel wins when present."""
    from .measures import IncoherentMeasureError, from_forward_kernel, from_levels
    from .graph import cotransitions
    if kernel is None:
        kernel = cotransitions(graph)
    if obj.get("forward_kernel") is not None:
        fwd = [[{int(v): Fraction(p) for v, p in row.items()} for row in lvl] for lvl in obj["forward_kernel"]]
        m = from_forward_kernel(graph, kernel, fwd)
        if obj.get("levels") is not None:
            given = [[Fraction(x) for x in lvl] for lvl in obj["levels"]]
            for n, lvl in enumerate(given):
                if n > m.depth or tuple(lvl) != m.levels[n].values:
                    raise IncoherentMeasureError(n, f"level {n} disagrees with the forward kernel")
        return m
    if "levels" not in obj:
        raise IncoherentMeasureError(0, "measure JSON needs 'levels' or 'forward_kernel'")
    try:
        dists = [[Fraction(x) for x in lvl] for lvl in obj["levels"]]
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise IncoherentMeasureError(0, f"unparseable level values: {exc}") from None
    return from_levels(kernel, dists)


def load_measure(path, graph: GradedGraph, kernel: CotransitionKernel | None = None):
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh, object_pairs_hook=_reject_duplicate_keys)
    return measure_from_json(obj, graph, kernel)
