from __future__ import annotations

from math import comb

import pytest

from bratteli_metric.families import (FamilySpec, ResourceBoundError, build, chain, compositions, partitions,
                                      pascal, stationary, unordered_pairs, young)
from bratteli_metric.graph import GraphError, dims, validate

from oracles import count_tableaux, hook_length_dim, multinomial


def test_pascal_sizes_and_binomial_dims():
    g = pascal(2, 10)
    assert [g.width(n) for n in range(11)] == list(range(1, 12))
    for n in range(11):
        assert list(dims(g)[n]) == [comb(n, k) for k in range(n + 1)]


def test_pascal_small_cases():
    assert pascal(3, 2).width(2) == 6
    assert pascal(2, 1).width(1) == 2
    with pytest.raises(GraphError):
        pascal(1, 3)


def test_pascal3_dims_are_multinomials():
    g = pascal(3, 7)
    for n in range(8):
        for lab, d in zip(g.levels[n], dims(g)[n]):
            assert d == multinomial([int(t) for t in lab.split(",")])


def test_young_level_four_and_small_dims():
    g = young(6)
    assert len(g.levels[4]) == 5
    table = dict(zip(g.levels[3] + g.levels[4], dims(g)[3] + dims(g)[4]))
    assert table["2,1"] == 2 and table["2,2"] == 2 and table["3,1"] == 3
    assert dims(g)[6][g.levels[6].index("1,1,1,1,1,1")] == 1


def test_young_dims_hook_length_and_brute_force():
    g = young(8)
    for n in range(1, 9):
        for lab, d in zip(g.levels[n], dims(g)[n]):
            shape = [int(t) for t in lab.split(",")]
            assert d == hook_length_dim(shape) == count_tableaux(shape)


def test_unordered_pairs_sizes():
    g = unordered_pairs(4, 4)
    assert [g.width(n) for n in range(1, 5)] == [4, 6, 15, 105]
    g3 = unordered_pairs(3, 6)
    assert all(g3.width(n) == 3 for n in range(1, 7))
    ge = unordered_pairs(2, 4, include_equal=True)
    assert [ge.width(n) for n in range(1, 5)] == [2, 3, 6, 21]


def test_unordered_pairs_equal_pair_has_double_edge():
    g = unordered_pairs(2, 2, include_equal=True)
    idx = g.levels[2].index("0|0")
    assert g.predecessors(2, idx) == ((0, 2),)


def test_unordered_pairs_resource_bound():
    with pytest.raises(ResourceBoundError):
        unordered_pairs(4, 5, max_level_size=1000)


def test_every_family_validates_cleanly():
    graphs = [pascal(2, 8), pascal(3, 5), unordered_pairs(4, 4), unordered_pairs(5, 3),
              chain(5), stationary([[1, 1, 0], [1, 1, 1], [0, 1, 1]], 5)]
    for g in graphs:
        assert validate(g).violations == (), g.metadata


def test_all_ones_stationary_is_accepted_with_warnings():
    rep = validate(stationary([[1, 1], [1, 1]], 5))
    assert rep.accepted and not rep.errors
    assert {w.level for w in rep.warnings} == {2, 3, 4, 5}


def test_young_warns_only_at_level_two():
    rep = validate(young(8))
    assert rep.accepted and not rep.errors
    assert [(w.level, w.kind) for w in rep.warnings] == [(2, "identical-predecessors")]


def test_include_equal_variant_is_flagged():
    g = unordered_pairs(3, 3, include_equal=True)
    assert not g.distinct_predecessors
    assert validate(g).accepted


def test_stationary_shapes_and_errors():
    g = stationary([[1]], 4)
    assert all(g.width(n) == 1 for n in range(5))
    with pytest.raises(GraphError):
        stationary([[1, 0], [1, 0]], 3)
    with pytest.raises(GraphError):
        stationary([[1, 2, 3]], 3)


def test_compositions_and_partitions():
    assert compositions(2, 2) == [(0, 2), (1, 1), (2, 0)]
    assert len(compositions(4, 3)) == comb(6, 2)
    assert partitions(4) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
    assert [len(partitions(n)) for n in range(1, 13)] == [1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77]


def test_build_dispatch():
    assert build(FamilySpec("chain", 3)).depth == 3
    assert build(FamilySpec("unordered-pairs", 3, seed_size=5)).width(3) == 45
    with pytest.raises(GraphError):
        FamilySpec("torus", 3)
    with pytest.raises(GraphError):
        build(FamilySpec("stationary", 3))
