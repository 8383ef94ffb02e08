from __future__ import annotations

import json
from fractions import Fraction

import pytest

from bratteli_metric.families import pascal, unordered_pairs, young
from bratteli_metric.graph import GraphError, cotransitions, dims
from bratteli_metric.measures import IncoherentMeasureError
from bratteli_metric.metric import iterate_metric
from bratteli_metric.serialize import (dims_csv, dumps, fmt, graph_from_json, graph_to_json, kernel_csv,
                                       load_graph, load_measure, measure_from_json, metric_csv, save_graph)

F = Fraction


@pytest.mark.parametrize("g", [pascal(2, 4), young(5), unordered_pairs(4, 3)], ids=["pascal", "young", "pairs"])
def test_graph_round_trip(tmp_path, g):
    path = tmp_path / "g.json"
    save_graph(g, path)
    back = load_graph(path)
    assert back.levels == g.levels and back.edges == g.edges
    assert back.distinct_predecessors == g.distinct_predecessors
    assert path.read_text() == dumps(graph_to_json(back))


def test_duplicate_edge_rejected():
    obj = {"levels": [["r"], ["a"]], "edges": [[{"from": 0, "to": 0, "mult": 1}, {"from": 0, "to": 0, "mult": 2}]]}
    with pytest.raises(GraphError, match="duplicate edge"):
        graph_from_json(obj)


def test_duplicate_key_rejected(tmp_path):
    path = tmp_path / "g.json"
    path.write_text('{"levels": [["r"]], "levels": [["r"]], "edges": []}')
    with pytest.raises(GraphError, match="duplicate key"):
        load_graph(path)


def test_malformed_graph_json(tmp_path):
    with pytest.raises(GraphError):
        graph_from_json({"levels": [["r"], ["a"]], "edges": []})
    with pytest.raises(GraphError):
        graph_from_json({"levels": [["r"], ["a"]], "edges": [[{"from": 0}]]})
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(GraphError):
        load_graph(path)


def test_csv_formats():
    g = pascal(2, 2)
    assert dims_csv(dims(g)).splitlines() == ["level,vertex,value", "0,0,1", "1,0,1", "1,1,1",
                                              "2,0,1", "2,1,2", "2,2,1"]
    lines = kernel_csv(cotransitions(g)).splitlines()
    assert lines[0] == "level,vertex,predecessor,value"
    assert "2,1,0,1/2" in lines and "2,1,1,1/2" in lines
    seq = iterate_metric(g)
    assert "2,0,1,1/2" in metric_csv(seq.at(2)).splitlines()


def test_fmt():
    assert fmt(F(1, 3)) == "1/3" and fmt(2) == "2" and fmt(0.25) == "0.25"


def test_measure_json_round_trip(tmp_path):
    g = pascal(2, 3)
    obj = {"levels": [["1"], ["1/2", "1/2"], ["1/4", "1/2", "1/4"]]}
    m = measure_from_json(obj, g)
    assert m.depth == 2 and m.at(2).values[1] == F(1, 2)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(m.to_json()))
    assert load_measure(path, g).levels == m.levels


def test_measure_json_errors():
    g = pascal(2, 3)
    with pytest.raises(IncoherentMeasureError) as info:
        measure_from_json({"levels": [["1"], ["1/3", "2/3"], ["1/4", "1/2", "1/4"]]}, g)
    assert info.value.level == 2
    with pytest.raises(IncoherentMeasureError):
        measure_from_json({}, g)
    with pytest.raises(IncoherentMeasureError):
        measure_from_json({"levels": [["x"]]}, g)
    fwd = [[{"0": "1/2", "1": "1/2"}]]
    with pytest.raises(IncoherentMeasureError):
        measure_from_json({"forward_kernel": fwd, "levels": [["1"], ["1/3", "2/3"]]}, g)
