"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected in ``RESULTS`` and repeated in the terminal
summary by ``conftest.py``.
"""
from __future__ import annotations

import random
import time
from fractions import Fraction

from bratteli_metric.cli import main
from bratteli_metric.compactness import cauchy_classes, compactness_profile
from bratteli_metric.families import bernoulli_kernel, pascal, random_graded, stationary, unordered_pairs, young
from bratteli_metric.graph import LevelDistribution, dims, project, rarefy
from bratteli_metric.measures import (extremality_check, from_forward_kernel, mixture,
                                      standardness_distance_profile)
from bratteli_metric.metric import iterate_metric
from bratteli_metric.transport import GroundMetric, brute_force_oracle, dual_lipschitz, kantorovich

from oracles import (count_tableaux, hook_length_dim, multinomial, random_composition, random_instance,
                     random_rational_metric)

F = Fraction
RESULTS: dict[int, tuple[bool, str]] = {}


def report(num: int, ok: bool, detail: str) -> None:
    line = f"acceptance {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[num] = (ok, line)
    print(line)
    assert ok, line


def test_01_transport_matches_oracle_and_dual():
    rng = random.Random(20241)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(1000):
        mu, nu, W = random_instance(rng, max_points=5, max_den=16)
        rho = GroundMetric(W)
        val = kantorovich(mu, nu, rho)[0]
        if not (val == brute_force_oracle(mu, nu, rho) == dual_lipschitz(mu, nu, rho)[0]):
            bad += 1
    dt = time.perf_counter() - t0
    report(1, bad == 0 and dt < 10, f"1000 instances, {bad} mismatches, {dt:.2f}s (limit 10s)")


def test_02_point_masses_recover_ground_metric():
    rng = random.Random(2)
    bad = 0
    for _ in range(50):
        k = rng.randint(1, 7)
        W = random_rational_metric(rng, k)
        rho = GroundMetric(W)
        for i in range(k):
            for j in range(k):
                di = [F(int(t == i)) for t in range(k)]
                dj = [F(int(t == j)) for t in range(k)]
                bad += kantorovich(di, dj, rho)[0] != W[i][j]
    report(2, bad == 0, f"50 metrics, {bad} pairs differ")


def test_03_projection_never_increases_distance():
    rng = random.Random(3)
    bad = 0
    for _ in range(500):
        depth = rng.randint(2, 8)
        g = random_graded(rng, max_width=6, depth=depth)
        n = rng.randint(2, depth)
        seq = iterate_metric(g, start=1, up_to=n)
        w = g.width(n)
        x = LevelDistribution(n, tuple(random_composition(rng, rng.randint(1, 12), w)))
        y = LevelDistribution(n, tuple(random_composition(rng, rng.randint(1, 12), w)))
        k = seq.kernel
        low = kantorovich(project(x, k).values, project(y, k).values, seq.at(n - 1))[0]
        bad += low > kantorovich(x.values, y.values, seq.at(n))[0]
    report(3, bad == 0, f"500 draws, {bad} violations")


def test_04_dominance_is_preserved():
    rng = random.Random(4)
    bad = 0
    for _ in range(200):
        k = rng.randint(2, 5)
        B = random_rational_metric(rng, k)
        r = rng.randint(1, 5)
        A = [[x * r for x in row] for row in B]
        # shrink A along a random sub-metric so that A <= r B is not an equality
        if rng.random() < 0.5:
            C = random_rational_metric(rng, k)
            A = [[min(a, c) for a, c in zip(ra, rc)] for ra, rc in zip(A, C)]
            if GroundMetric(A, check=False).problems():
                A = [[x * r for x in row] for row in B]
        mu = random_composition(rng, rng.randint(1, 12), k)
        nu = random_composition(rng, rng.randint(1, 12), k)
        bad += kantorovich(mu, nu, GroundMetric(A))[0] > r * kantorovich(mu, nu, GroundMetric(B))[0]
    g = pascal(2, 8)
    rB = [[0, F(1, 3)], [F(1, 3), 0]]
    rA = [[0, F(1, 2)], [F(1, 2), 0]]
    r = F(3, 2)
    sa, sb = iterate_metric(g, initial=rA), iterate_metric(g, initial=rB)
    levels = 0
    for a, b in zip(sa, sb):
        ok = (a.matrix <= r * b.matrix).all()
        bad += not ok
        levels += 1
    report(4, bad == 0 and levels >= 5, f"200 random pairs plus {levels} Pascal levels, {bad} violations")


def _triangle_violations(lm) -> int:
    M = lm.matrix
    W = len(lm)
    return sum(M[i, j] > M[i, k] + M[k, j] for i in range(W) for j in range(W) for k in range(W))


def test_05_iterated_metrics_are_metrics():
    bad = 0
    checked = 0
    for g in (pascal(2, 12), young(10), unordered_pairs(4, 3)):
        for lm in iterate_metric(g, mode="exact", bit_cutoff=10**9):
            assert lm.exact
            M = lm.matrix
            W = len(lm)
            bad += _triangle_violations(lm)
            bad += sum(M[i, j] != M[j, i] or M[i, j] < 0 for i in range(W) for j in range(W))
            bad += sum(M[i, i] != 0 for i in range(W))
            checked += 1
    report(5, bad == 0, f"{checked} levels checked, {bad} violations")


def test_06_pascal_closed_form():
    g = pascal(2, 12)
    seq = iterate_metric(g, start=1)
    bad = 0
    for lm in seq:
        n = lm.level
        idx = [int(lab.split(",")[0]) for lab in g.levels[n]]
        for a in range(len(idx)):
            for b in range(len(idx)):
                bad += lm.matrix[a, b] != F(abs(idx[a] - idx[b]), n)
    report(6, bad == 0, f"levels 1..12, {bad} entries differ from |i-j|/n")


def test_07_compactness_contrast():
    t0 = time.perf_counter()
    g = pascal(2, 200)
    seq = iterate_metric(g, mode="float")
    rep = compactness_profile(seq, [0.1], levels=range(1, 201))
    series = [N for _, N in rep.series(0.1)]
    tail = series[-40:]
    pascal_ok = max(tail) <= 6 and rep.uniformly_bounded(0.1)
    pairs = compactness_profile(iterate_metric(unordered_pairs(4, 4)), [F(3, 10)], exact=True)
    ps = [N for _, N in pairs.series(F(3, 10))]
    pairs_ok = all(a < b for a, b in zip(ps, ps[1:]))
    dt = time.perf_counter() - t0
    report(7, pascal_ok and pairs_ok and dt < 300,
           f"Pascal eps=0.1 tail max {max(tail)} (levels 161-200: {sorted(set(tail))}); "
           f"unordered-pairs eps=0.3 levels 1-4: {ps}; {dt:.1f}s (limit 300s)")


def test_08_width_three_decay():
    g = stationary([[1, 1, 0], [1, 1, 1], [0, 1, 1]], 50)
    seq = iterate_metric(g)
    last = float(seq.at(50).diameter())
    first = float(seq.at(1).diameter())
    report(8, last < 0.01 * first, f"diameter level 50 = {last:.3g}, level 1 = {first}")


def test_09_bernoulli_family(pascal200):
    g, fseq = pascal200
    k = fseq.kernel
    exact = iterate_metric(g, k, up_to=12)
    eps = F(1, 10)
    lines = []
    ok = True
    argmins = []
    for p in (F(1, 5), F(1, 2), F(4, 5)):
        m = from_forward_kernel(g, k, bernoulli_kernel(g, p))
        ext = extremality_check(m, exact, [eps], [(2, 60)])
        tv = ext.mass(2, 60, eps)
        internal = ext.mass(2, 60, eps, ball="internal")
        prof = standardness_distance_profile(m, fseq)
        dec = prof[99][1] < prof[9][1]
        ok &= tv > 0.95 and dec
        argmins.append([(n, v) for n, _, v in prof])
        lines.append(f"p={p}: mass {tv:.4f} (internal ball {internal:.4f}), "
                     f"standardness {prof[9][1]:.3f} -> {prof[99][1]:.3f}")
    cl = cauchy_classes(fseq, argmins, 0.1)
    clusters_ok = all(cl.cauchy) and len(cl.clusters) == 3
    parts = [from_forward_kernel(g, k, bernoulli_kernel(g, p)) for p in (F(1, 4), F(3, 4))]
    mix = mixture(parts, [F(1, 2), F(1, 2)])
    mix_mass = extremality_check(mix, exact, [eps], [(2, 60)]).mass(2, 60, eps)
    ok &= clusters_ok and mix_mass <= 0.6
    report(9, ok, "; ".join(lines) + f"; clusters {list(cl.clusters)}; mixture mass {mix_mass:.4f}")


def test_10_dimension_oracles():
    bad = 0
    g = pascal(2, 12)
    for n, lvl in enumerate(g.levels):
        for lab, d in zip(lvl, dims(g)[n]):
            bad += d != multinomial([int(t) for t in lab.split(",")])
    y = young(10)
    for n in range(1, 11):
        for lab, d in zip(y.levels[n], dims(y)[n]):
            shape = [int(t) for t in lab.split(",")]
            bad += not (d == hook_length_dim(shape) == count_tableaux(shape))
    report(10, bad == 0, f"Pascal to 12 and Young to 10, {bad} mismatches")


def test_11_rarefaction_consistency():
    g = pascal(2, 20)
    kept = list(range(0, 21, 2))
    thin = rarefy(g, kept)
    d0, d1 = dims(g), dims(thin)
    bad = sum(d1[j] != d0[n] for j, n in enumerate(kept))
    orig = iterate_metric(g, up_to=10)
    rho2 = [list(row) for row in orig.at(2).matrix]
    rare = iterate_metric(thin, initial=rho2, up_to=5)
    for j in range(1, 6):
        bad += int((rare.at(j).matrix > orig.at(2 * j).matrix).sum())
    report(11, bad == 0, f"dims at kept levels and metrics to level 10, {bad} violations")


CLI_RUNS = [
    ["family", "--family", "young", "--depth", "6"],
    ["metric", "--family", "pascal", "--depth", "10", "--exact"],
    ["compactness", "--family", "unordered-pairs", "--depth", "3", "--eps", "1/10", "3/10"],
    ["measure", "--family", "pascal", "--depth", "16", "--bernoulli", "1/4", "3/4", "--sample-size", "100"],
    ["rarefy", "--family", "pascal", "--depth", "10", "--step", "2"],
]


def test_12_cli_is_deterministic(tmp_path):
    diffs = []
    for i, argv in enumerate(CLI_RUNS):
        outs = []
        for rep in range(2):
            out = tmp_path / f"{i}_{rep}"
            assert main([*argv, "--out", str(out)]) == 0
            outs.append({p.name: p.read_bytes() for p in out.iterdir()})
        if outs[0] != outs[1]:
            diffs.append(argv[0])
    report(12, not diffs, f"{len(CLI_RUNS)} commands run twice, differing: {diffs or 'none'}")
