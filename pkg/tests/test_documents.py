"""Document parsing, canonical serialization, and roundtrip contracts."""

from __future__ import annotations

import json

import numpy as np
import pytest

from gridupgrade import (
    DocumentError,
    InvalidNetworkError,
    Point,
    build_problem,
    evaluate_problem,
    parse_network,
    parse_point,
    parse_problem,
    serialize_network,
    serialize_point,
    serialize_problem,
    solve,
)

WORKED_DOC = """
{
 "version": "1",
 "buses": [
  {"id": 1, "v_min": 0.9, "v_max": 1.1},
  {"id": 0, "v_min": 0.9, "v_max": 1.1}
 ],
 "lines": [{"id": 0, "from": 0, "to": 1, "y": [1.0, -3.0], "i_max": 0.05}],
 "upgrades": [{"id": 0, "line": 0, "delta_y": [1.0, -3.0], "delta_i": 0.1, "cost": 1.0}],
 "selection": [],
 "scenarios": [
  {
   "id": 0,
   "slack": {"bus": 0, "v": 1.0},
   "s_bounds": [
    {"p_min": -10.0, "p_max": 10.0, "q_min": -10.0, "q_max": 10.0},
    {"p_min": -0.1, "p_max": -0.1, "q_min": 0.0, "q_max": 0.0}
   ]
  }
 ]
}
"""


def test_parse_worked_document():
    """The worked two-bus document parses; ids may arrive out of order."""
    net = parse_network(WORKED_DOC)
    assert net.n_bus == 2 and net.n_line == 1 and net.n_upgrade == 1
    assert net.buses[0].id == 0
    assert net.lines[0].y_branch == 1 - 3j
    assert net.scenarios[0].s_min[1] == complex(-0.1, 0)


def test_parse_rejects_missing_line_reference():
    doc = json.loads(WORKED_DOC)
    doc["upgrades"][0]["line"] = 7
    with pytest.raises(DocumentError, match="upgrade 0.*line 7"):
        parse_network(json.dumps(doc))


def test_parse_rejects_duplicate_bus_id():
    doc = json.loads(WORKED_DOC)
    doc["buses"][0]["id"] = 0
    with pytest.raises(DocumentError, match="dense"):
        parse_network(json.dumps(doc))


def test_parse_rejects_unknown_field_in_strict_mode():
    doc = json.loads(WORKED_DOC)
    doc["buses"][0]["color"] = "red"
    with pytest.raises(DocumentError, match="unknown fields.*color"):
        parse_network(json.dumps(doc))
    assert parse_network(json.dumps(doc), strict=False).n_bus == 2


def test_parse_rejects_version_mismatch():
    doc = json.loads(WORKED_DOC)
    doc["version"] = "2"
    with pytest.raises(DocumentError, match="version"):
        parse_network(json.dumps(doc))


def test_syntax_error_carries_line_and_column():
    with pytest.raises(DocumentError, match=r"line \d+ column \d+"):
        parse_network('{"version": "1", buses: []}')


def test_validation_failure_names_entity():
    doc = json.loads(WORKED_DOC)
    doc["lines"][0]["to"] = 0
    with pytest.raises(InvalidNetworkError, match="line 0"):
        parse_network(json.dumps(doc))


def test_infinite_bounds_roundtrip_as_null():
    doc = json.loads(WORKED_DOC)
    doc["scenarios"][0]["s_bounds"][0]["p_max"] = None
    net = parse_network(json.dumps(doc))
    assert net.scenarios[0].s_max[0].real == np.inf
    out = serialize_network(net)
    assert '"p_max": null' in out


def test_network_roundtrip_canonical(worked_net):
    text = serialize_network(worked_net)
    again = serialize_network(parse_network(text))
    assert again == text


def test_problem_document_has_all_constraint_records(worked_net):
    problem = build_problem(worked_net)
    doc = json.loads(serialize_problem(problem))
    assert len(doc["constraints"]) == 23
    assert doc["layout"] == {"n_bus": 2, "n_line": 1, "n_scen": 1, "n_upg": 1}


def test_problem_roundtrip_byte_identical(worked_net):
    problem = build_problem(worked_net)
    text = serialize_problem(problem)
    assert serialize_problem(parse_problem(text)) == text


def test_problem_roundtrip_evaluates_identically(worked_net):
    """Parsed problems produce bit-equal record values on a fixed point."""
    problem = build_problem(worked_net)
    parsed = parse_problem(serialize_problem(problem))
    rng = np.random.default_rng(4)
    point = Point(
        a=np.array([1]),
        z=(rng.normal(1, 0.1, 4),),
        y=(rng.normal(0, 0.2, 4),),
    )
    before = evaluate_problem(problem, point)
    after = evaluate_problem(parsed, point)
    for rec_a, rec_b in zip(before.records, after.records):
        assert rec_a.value == rec_b.value


def test_problem_parse_rejects_crossed_bounds(worked_net):
    doc = json.loads(serialize_problem(build_problem(worked_net)))
    doc["constraints"][0]["alpha"] = 2.0
    doc["constraints"][0]["beta"] = 1.0
    with pytest.raises(DocumentError, match="crossed"):
        parse_problem(json.dumps(doc))


def test_problem_parse_rejects_malformed_triplet(worked_net):
    doc = json.loads(serialize_problem(build_problem(worked_net)))
    doc["constraints"][0]["Q"] = [[0, 0]]
    with pytest.raises(DocumentError, match="malformed Q triplet"):
        parse_problem(json.dumps(doc))


def test_problem_parse_rejects_out_of_range_index(worked_net):
    doc = json.loads(serialize_problem(build_problem(worked_net)))
    doc["constraints"][0]["Q"] = [[0, 99, 1.0]]
    with pytest.raises(DocumentError, match="out of range"):
        parse_problem(json.dumps(doc))


def test_point_roundtrip(worked_net):
    result = solve(worked_net)
    problem = build_problem(worked_net)
    text = serialize_point(result.certificate.point)
    parsed = parse_point(text, problem.layout)
    assert serialize_point(parsed) == text
    assert np.array_equal(parsed.a, result.certificate.point.a)


def test_point_parse_rejects_wrong_lengths(worked_net):
    problem = build_problem(worked_net)
    doc = {
        "version": "1",
        "a": [0],
        "scenarios": [{"id": 0, "z": [1.0, 1.0, 0.0], "y": [0.0] * 4}],
    }
    with pytest.raises(DocumentError, match="z length 3"):
        parse_point(json.dumps(doc), problem.layout)


def test_point_parse_rejects_non_binary(worked_net):
    problem = build_problem(worked_net)
    doc = {
        "version": "1",
        "a": [2],
        "scenarios": [{"id": 0, "z": [1.0, 1.0, 0.0, 0.0], "y": [0.0] * 4}],
    }
    with pytest.raises(DocumentError, match="0 or 1"):
        parse_point(json.dumps(doc), problem.layout)


def test_nan_rejected():
    doc = json.loads(WORKED_DOC)
    doc["buses"][0]["v_min"] = float("nan")
    with pytest.raises(DocumentError, match="NaN"):
        parse_network(json.dumps(doc))
