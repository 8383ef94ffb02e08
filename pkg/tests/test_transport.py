from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bratteli_metric.transport import (GroundMetric, MetricError, TransportError, brute_force_oracle,
                                       dual_lipschitz, enumerate_basic_plans, kantorovich, kantorovich_to_delta,
                                       kr_norm)

from oracles import line_w1, random_instance, random_rational_metric, transport_by_permutations

F = Fraction
seeds = st.integers(0, 2**32 - 1)


def test_discrete_metric_gives_total_variation():
    rho = GroundMetric.discrete(3)
    val, _ = kantorovich([F(1, 2), F(1, 2), 0], [0, F(1, 2), F(1, 2)], rho)
    assert val == F(1, 2)


def test_identical_measures_cost_zero():
    rho = GroundMetric(random_rational_metric(random.Random(1), 4))
    mu = [F(1, 4)] * 4
    assert kantorovich(mu, mu, rho)[0] == 0


def test_delta_to_delta_is_ground_distance():
    rho = GroundMetric([[0, 3], [3, 0]])
    assert kantorovich([1, 0], [0, 1], rho)[0] == 3


def test_half_split_on_a_line():
    rho = GroundMetric([[abs(i - j) for j in range(3)] for i in range(3)])
    val, plan = kantorovich([1, 0, 0], [0, F(1, 2), F(1, 2)], rho)
    assert val == F(3, 2)
    rows, cols = plan.marginals()
    assert rows == [1, 0, 0] and cols == [0, F(1, 2), F(1, 2)]


def test_ground_metric_rejects_axiom_violations():
    with pytest.raises(MetricError):
        GroundMetric([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    with pytest.raises(MetricError):
        GroundMetric([[0, 1], [2, 0]])
    with pytest.raises(MetricError):
        GroundMetric([[1, 1], [1, 0]])
    with pytest.raises(MetricError):
        GroundMetric([[0, 1, 2]])


def test_measure_checks():
    rho = GroundMetric.discrete(2)
    with pytest.raises(TransportError):
        kantorovich([F(1, 2), F(1, 3)], [1, 0], rho)
    with pytest.raises(TransportError):
        kantorovich([1, 0, 0], [1, 0], rho)
    with pytest.raises(TransportError):
        kantorovich([F(3, 2), F(-1, 2)], [1, 0], rho)
    with pytest.raises(ValueError):
        kantorovich([1, 0], [1, 0], rho, mode="fast")


def test_plan_csv_uses_fraction_strings():
    rho = GroundMetric.discrete(2)
    _, plan = kantorovich([F(1, 3), F(2, 3)], [F(2, 3), F(1, 3)], rho)
    assert ("0", "0", "1/3") in [tuple(map(str, r)) for r in plan.csv_rows()]


def test_kantorovich_to_delta():
    rho = GroundMetric([[abs(i - j) for j in range(4)] for i in range(4)])
    mu = [F(1, 4)] * 4
    assert kantorovich_to_delta(mu, 0, rho) == F(6, 4)
    assert kantorovich_to_delta(mu, 0, rho) == kantorovich(mu, [1, 0, 0, 0], rho)[0]


def test_kr_norm():
    rho = GroundMetric([[0, 2], [2, 0]])
    assert kr_norm([F(1, 3), F(-1, 3)], rho) == F(2, 3)
    assert kr_norm([0, 0], rho) == 0
    with pytest.raises(TransportError):
        kr_norm([1, 0], rho)


def test_brute_force_support_bound():
    rho = GroundMetric.discrete(6)
    with pytest.raises(TransportError):
        brute_force_oracle([F(1, 6)] * 6, [F(1, 6)] * 6, rho)


def test_enumerated_basic_plans_are_feasible():
    a, b = [F(1, 2), F(1, 2)], [F(1, 3), F(1, 3), F(1, 3)]
    plans = list(enumerate_basic_plans(a, b))
    assert plans
    for p in plans:
        for i in range(2):
            assert sum(x for (r, _), x in p.items() if r == i) == a[i]
        for j in range(3):
            assert sum(x for (_, c), x in p.items() if c == j) == b[j]


@given(seeds)
def test_exact_solver_matches_oracle_and_dual(seed):
    mu, nu, W = random_instance(random.Random(seed))
    rho = GroundMetric(W)
    val, plan = kantorovich(mu, nu, rho)
    assert val == brute_force_oracle(mu, nu, rho)
    dual, pot = dual_lipschitz(mu, nu, rho)
    assert dual == val
    n = len(mu)
    assert all(pot[i] - pot[j] <= W[i][j] for i in range(n) for j in range(n))
    rows, cols = plan.marginals()
    assert rows == mu and cols == nu


@given(seeds)
def test_exact_solver_matches_basic_plan_enumeration(seed):
    rng = random.Random(seed)
    mu, nu, W = random_instance(rng, max_points=3)
    rho = GroundMetric(W)
    I = [i for i in range(len(mu)) if mu[i]]
    J = [j for j in range(len(nu)) if nu[j]]
    best = min(sum(x * W[I[i]][J[j]] for (i, j), x in p.items())
               for p in enumerate_basic_plans([mu[i] for i in I], [nu[j] for j in J]))
    assert kantorovich(mu, nu, rho)[0] == best


@given(seeds, st.integers(1, 5))
def test_uniform_measures_match_assignment_oracle(seed, k):
    rng = random.Random(seed)
    W = random_rational_metric(rng, 2 * k)
    rho = GroundMetric(W)
    mu = [F(1, k)] * k + [F(0)] * k
    nu = [F(0)] * k + [F(1, k)] * k
    sub = [[W[i][k + j] for j in range(k)] for i in range(k)]
    assert kantorovich(mu, nu, rho)[0] == transport_by_permutations([F(1, k)] * k, [F(1, k)] * k, sub)


@given(seeds)
def test_line_metric_matches_cdf_formula(seed):
    rng = random.Random(seed)
    k = rng.randint(2, 6)
    pos = sorted(F(rng.randint(0, 40), rng.randint(1, 8)) for _ in range(k))
    rho = GroundMetric([[abs(p - q) for q in pos] for p in pos])
    mu, nu, _ = random_instance(rng, max_points=k)
    mu = (mu + [F(0)] * k)[:k]
    nu = (nu + [F(0)] * k)[:k]
    assert kantorovich(mu, nu, rho)[0] == line_w1(mu, nu, pos)


@given(seeds)
def test_kantorovich_is_a_metric_on_measures(seed):
    rng = random.Random(seed)
    k = rng.randint(1, 4)
    rho = GroundMetric(random_rational_metric(rng, k))
    from oracles import random_composition
    x, y, z = (random_composition(rng, rng.randint(1, 12), k) for _ in range(3))
    dxy = kantorovich(x, y, rho)[0]
    assert dxy == kantorovich(y, x, rho)[0]
    assert dxy <= kantorovich(x, z, rho)[0] + kantorovich(z, y, rho)[0]


@given(seeds)
def test_restriction_to_point_masses(seed):
    rng = random.Random(seed)
    k = rng.randint(1, 6)
    W = random_rational_metric(rng, k)
    rho = GroundMetric(W)
    for i in range(k):
        for j in range(k):
            di = [F(int(t == i)) for t in range(k)]
            dj = [F(int(t == j)) for t in range(k)]
            assert kantorovich(di, dj, rho)[0] == W[i][j]


@given(seeds, st.integers(1, 9))
def test_scaling_the_ground_metric_scales_the_cost(seed, r):
    mu, nu, W = random_instance(random.Random(seed))
    rho = GroundMetric(W)
    rho2 = GroundMetric([[r * x for x in row] for row in W])
    assert kantorovich(mu, nu, rho2)[0] == r * kantorovich(mu, nu, rho)[0]


@given(seeds)
def test_float_mode_close_to_exact(seed):
    mu, nu, W = random_instance(random.Random(seed))
    exact = kantorovich(mu, nu, GroundMetric(W))[0]
    approx = kantorovich([float(x) for x in mu], [float(x) for x in nu],
                         GroundMetric(np.array(W, dtype=float)), mode="float")[0]
    assert abs(float(exact) - approx) < 1e-9 * max(1.0, float(exact))
