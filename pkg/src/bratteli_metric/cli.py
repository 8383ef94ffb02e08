"""Command-line entry point.

Subcommands: ``family``, ``metric``, ``compactness``, ``measure``, ``rarefy``.
Every command writes plain report files into the output directory; the
same config produces the same bytes.  Exit codes: 0 ok, 2 invalid graph or
config, 3 incoherent or non-central measure, 4 resource bound exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .compactness import bounded_width_check, cauchy_classes, compactness_profile, trend_verdict
from .families import FAMILIES, FamilySpec, ResourceBoundError, bernoulli_kernel, build
from .graph import GraphError, cotransitions, dims, rarefy, validate
from .measures import (CentralityError, IncoherentMeasureError, concentration_profile, extremality_check,
                       from_forward_kernel, martingale_profile, mixture, standardness_distance_profile)
from .metric import iterate_metric
from .serialize import (dims_csv, dumps, fmt, graph_to_json, kernel_csv, load_graph, load_measure,
                        metric_csv, write_text)
from .transport import GroundMetric, MetricError

log = logging.getLogger("bratteli_metric")

EXIT_OK, EXIT_INVALID, EXIT_MEASURE, EXIT_RESOURCE = 0, 2, 3, 4
ENV_OUT = "BRATTELI_METRIC_OUT"
ENV_JOBS = "BRATTELI_METRIC_JOBS"
DISCLAIMER = "finite-horizon diagnostic; no statement about the infinite graph is proved"


class ConfigError(ValueError):
    pass


def _positive_fraction(text: str) -> Fraction:
    try:
        x = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if x <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return x


def _pair(text: str) -> tuple[int, int]:
    try:
        n, m = (int(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected n:m, got {text!r}") from None
    return n, m


def _graph_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("graph source")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--graph", type=Path, help="graph JSON file")
    g.add_argument("--depth", type=int, default=None)
    g.add_argument("--d", type=int, default=2, help="pascal dimension")
    g.add_argument("--seed-size", type=int, default=4, help="unordered-pairs level-1 size")
    g.add_argument("--include-equal", action="store_true", help="unordered-pairs: include {a,a}")
    g.add_argument("--matrix", help="stationary adjacency as JSON text or a JSON file path")
    g.add_argument("--max-level-size", type=int, default=100_000)
    return p


def _metric_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("internal metric")
    mode = g.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact")
    mode.add_argument("--float", dest="mode", action="store_const", const="float")
    g.set_defaults(mode="exact")
    g.add_argument("--bit-cutoff", type=int, default=4096)
    g.add_argument("--initial", default="discrete",
                   help="'discrete' or a JSON file holding a matrix (numbers or fraction strings)")
    g.add_argument("--start", type=int, default=None,
                   help="level carrying the initial metric (default: first level with two vertices)")
    g.add_argument("--up-to", type=int, default=None)
    g.add_argument("--max-width", type=int, default=5000, help="refuse levels wider than this")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bratteli-metric", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help=f"output directory (env {ENV_OUT})")
    common.add_argument("--jobs", type=int, default=None, help=f"worker processes (env {ENV_JOBS})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    gopt, mopt = _graph_options(), _metric_options()

    sub.add_parser("family", parents=[common, gopt], help="write a generated graph to file")
    sub.add_parser("metric", parents=[common, gopt, mopt], help="iterate the internal metric")
    c = sub.add_parser("compactness", parents=[common, gopt, mopt], help="covering-number profile")
    c.add_argument("--eps", type=_positive_fraction, nargs="+", default=[Fraction(1, 10)])
    c.add_argument("--exact-nets", action="store_true", help="exhaustive nets on levels of <= 20 vertices")
    m = sub.add_parser("measure", parents=[common, gopt, mopt], help="extremality and standardness profiles")
    src = m.add_mutually_exclusive_group(required=True)
    src.add_argument("--measure", type=Path, help="measure JSON file")
    src.add_argument("--bernoulli", type=Fraction, nargs="+", metavar="P",
                     help="Bernoulli(p) on a d=2 pascal graph; several values give a mixture")
    m.add_argument("--weights", type=Fraction, nargs="+", help="mixture weights (default uniform)")
    m.add_argument("--eps", type=_positive_fraction, nargs="+", default=[Fraction(1, 10)])
    m.add_argument("--pairs", type=_pair, nargs="+", help="level pairs n:m for the extremality check")
    m.add_argument("--delta", type=_positive_fraction, default=Fraction(1, 10))
    m.add_argument("--sample-size", type=int, default=10_000)
    m.add_argument("--martingale-form", choices=("pairwise", "mean"), default="pairwise")
    r = sub.add_parser("rarefy", parents=[common, gopt], help="drop levels and compose multiplicities")
    keep = r.add_mutually_exclusive_group(required=True)
    keep.add_argument("--keep", help="comma-separated kept levels, must include 0")
    keep.add_argument("--step", type=int, help="keep every step-th level")
    return parser


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(ENV_OUT) or "bratteli_out"
    return Path(out)


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    return max(1, int(os.environ.get(ENV_JOBS, "1")))


def _config_echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("out", "verbose", "jobs"):
            continue
        if isinstance(v, Path):
            v = str(v)
        elif isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, list):
            v = [str(x) if isinstance(x, Fraction) else (list(x) if isinstance(x, tuple) else x) for x in v]
        out[k] = v
    return out


def _header(args, **extra) -> dict:
    return {"tool": "bratteli-metric", "version": __version__, "config": _config_echo(args),
            "seed": args.seed, **extra}


def _load_json_arg(text: str):
    p = Path(text)
    if p.exists():
        return json.loads(p.read_text(encoding="utf-8"))
    return json.loads(text)


def _graph(args):
    if (args.family is None) == (args.graph is None):
        raise ConfigError("give exactly one of --family or --graph")
    if args.graph is not None:
        graph = load_graph(args.graph)
        if args.depth is not None:
            graph = graph.truncate(args.depth)
    else:
        if args.depth is None:
            raise ConfigError("--family needs --depth")
        kernel = None
        if args.family == "stationary":
            if args.matrix is None:
                raise ConfigError("stationary family needs --matrix")
            try:
                kernel = tuple(tuple(int(x) for x in row) for row in _load_json_arg(args.matrix))
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad --matrix: {exc}") from None
        spec = FamilySpec(args.family, args.depth, d=args.d, seed_size=args.seed_size,
                          include_equal=args.include_equal, kernel=kernel,
                          extra={"max_level_size": args.max_level_size})
        graph = build(spec)
    report = validate(graph)
    if not report.accepted:
        raise _Invalid(report.to_dict())
    return graph, report


class _Invalid(Exception):
    def __init__(self, payload: dict):
        super().__init__("graph failed validation")
        self.payload = payload


def _metric(args, graph, kernel, up_to=None):
    up_to = up_to or args.up_to or graph.depth
    widest = max(graph.width(n) for n in range(args.start or 1, up_to + 1))
    if widest > args.max_width:
        raise ResourceBoundError(f"level width {widest} exceeds --max-width {args.max_width}")
    initial = None
    name = "discrete"
    if args.initial != "discrete":
        raw = _load_json_arg(args.initial)
        initial = GroundMetric([[Fraction(x) for x in row] for row in raw])
        name = "file:" + Path(args.initial).name
    return iterate_metric(graph, kernel, initial, up_to, args.start, args.mode,
                          args.bit_cutoff, _jobs(args), initial_name=name)


def _provenance(seq) -> dict:
    return {k: v for k, v in sorted(seq.provenance.items())}


def cmd_family(args, out: Path) -> None:
    graph, report = _graph(args)
    write_text(out / "graph.json", dumps(graph_to_json(graph)))
    write_text(out / "dims.csv", dims_csv(dims(graph)))
    write_text(out / "validation.json", dumps({**_header(args), **report.to_dict()}))


def cmd_metric(args, out: Path) -> None:
    graph, report = _graph(args)
    kernel = cotransitions(graph)
    seq = _metric(args, graph, kernel)
    for lm in seq:
        write_text(out / f"metric_level_{lm.level:03d}.csv", metric_csv(lm))
    write_text(out / "kernel.csv", kernel_csv(kernel))
    write_text(out / "dims.csv", dims_csv(dims(graph)))
    write_text(out / "provenance.json", dumps({
        **_header(args, mode=args.mode, horizon=[seq.start, seq.stop]),
        "provenance": _provenance(seq),
        "validation_warnings": [v.detail for v in report.warnings],
        "files": [f"metric_level_{lm.level:03d}.csv" for lm in seq],
    }))


def cmd_compactness(args, out: Path) -> None:
    graph, _ = _graph(args)
    seq = _metric(args, graph, cotransitions(graph))
    rep = compactness_profile(seq, args.eps, exact=args.exact_nets)
    width = bounded_width_check(graph, seq)
    write_text(out / "covering.csv", rep.csv_text())
    write_text(out / "covering_plot.csv", rep.plot_csv_text())
    write_text(out / "covering_summary.json", dumps({
        **_header(args, mode=args.mode, horizon=list(rep.horizon)),
        "disclaimer": DISCLAIMER,
        "provenance": _provenance(seq),
        "covering": rep.summary(),
        "bounded_width": width.to_dict(),
    }))


def _default_pairs(depth: int) -> list[tuple[int, int]]:
    n = min(2, depth - 1)
    ms = sorted({max(n + 1, depth // 4), max(n + 1, depth // 2), depth})
    return [(n, m) for m in ms]


def _measure(args, graph, kernel):
    if args.measure is not None:
        return load_measure(args.measure, graph, kernel)
    if args.weights is not None and len(args.weights) != len(args.bernoulli):
        raise ConfigError("--weights needs one value per --bernoulli parameter")
    parts = [from_forward_kernel(graph, kernel, bernoulli_kernel(graph, p)) for p in args.bernoulli]
    if len(parts) == 1:
        return parts[0]
    weights = args.weights or [Fraction(1, len(parts))] * len(parts)
    return mixture(parts, weights)


def cmd_measure(args, out: Path) -> None:
    graph, _ = _graph(args)
    kernel = cotransitions(graph)
    measure = _measure(args, graph, kernel)
    seq = _metric(args, graph, kernel, up_to=min(args.up_to or measure.depth, measure.depth))
    top = seq.stop
    pairs = args.pairs or _default_pairs(top)
    ext = extremality_check(measure, seq, args.eps, pairs)
    std = standardness_distance_profile(measure, seq)
    conc = concentration_profile(measure, seq, args.eps)
    mart = martingale_profile(measure, seq, args.sample_size, args.seed, args.martingale_form)

    write_text(out / "extremality.csv", _rows_csv(
        ["n", "m", "epsilon", "tv_mass", "internal_mass"],
        [(n, m, str(e), fmt(tv), fmt(im)) for n, m, e, tv, im in ext.rows]))
    write_text(out / "standardness.csv", _rows_csv(
        ["level", "distance", "nearest_vertex"], [(n, fmt(d), g) for n, d, g in std]))
    write_text(out / "concentration.csv", _rows_csv(
        ["level", "epsilon", "mass"], [(n, str(e), fmt(x)) for n, e, x in conc]))
    write_text(out / "martingale.csv", _rows_csv(
        ["level", "value", "method"], [(n, fmt(v), how) for n, v, how in mart.rows]))

    std_ok = trend_verdict([d for _, d, _ in std], 0.0) if std else False
    conc_ok = all(trend_verdict([x for _, e2, x in conc if e2 == e], 1.0) for e in args.eps) if conc else False
    argmins = [(n, g) for n, _, g in std]
    cauchy = cauchy_classes(seq, [argmins], float(args.delta)) if len(argmins) > 1 else None
    evidence = std_ok and conc_ok
    verdict = ("consistent with extremality" if ext.consistent else "not consistent with extremality") + \
        "; standardness evidence: " + ("yes" if evidence else "no")
    write_text(out / "verdict.json", dumps({
        **_header(args, mode=args.mode, horizon=[seq.start, seq.stop]),
        "disclaimer": DISCLAIMER,
        "verdict": verdict,
        "extremality": ext.to_dict(),
        "standardness_distance_to_zero": std_ok,
        "concentration_to_one": conc_ok,
        "martingale": {"form": mart.form, "seed": mart.seed,
                       "tends_to_zero": trend_verdict([v for _, v, _ in mart.rows], 0.0) if mart.rows else True},
        "nearest_vertex_sequence_cauchy": None if cauchy is None else cauchy.cauchy[0],
        "provenance": _provenance(seq),
    }))


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_rarefy(args, out: Path) -> None:
    graph, _ = _graph(args)
    if args.keep is not None:
        try:
            kept = [int(t) for t in args.keep.split(",") if t.strip()]
        except ValueError:
            raise ConfigError(f"bad --keep list {args.keep!r}") from None
    else:
        if args.step < 1:
            raise ConfigError("--step must be >= 1")
        kept = list(range(0, graph.depth + 1, args.step))
    thin = rarefy(graph, kept)
    write_text(out / "graph.json", dumps(graph_to_json(thin)))
    write_text(out / "dims.csv", dims_csv(dims(thin)))


COMMANDS = {"family": cmd_family, "metric": cmd_metric, "compactness": cmd_compactness,
            "measure": cmd_measure, "rarefy": cmd_rarefy}


def _fail(out: Path, code: int, kind: str, message: str, detail=None) -> int:
    payload = {"error": kind, "message": message, "exit_code": code}
    if detail is not None:
        payload["detail"] = detail
    text = dumps(payload)
    sys.stderr.write(text)
    try:
        write_text(out / "error.json", text)
    except OSError:
        pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = _out_dir(args)
    try:
        COMMANDS[args.command](args, out)
    except _Invalid as exc:
        return _fail(out, EXIT_INVALID, "validation", str(exc), exc.payload)
    except (IncoherentMeasureError, CentralityError) as exc:
        detail = {"level": exc.level} if isinstance(exc, IncoherentMeasureError) else None
        return _fail(out, EXIT_MEASURE, type(exc).__name__, str(exc), detail)
    except ResourceBoundError as exc:
        return _fail(out, EXIT_RESOURCE, "resource-bound", str(exc))
    except (GraphError, MetricError, ConfigError, OSError, json.JSONDecodeError) as exc:
        return _fail(out, EXIT_INVALID, type(exc).__name__, str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
