"""Report bundle: delimited records and rendered figures."""

from __future__ import annotations

import numpy as np

from conftest import two_bus_upgrade_net
from gridupgrade import apply_upgrades, branch_flows, build_problem, evaluate_problem, solve
from gridupgrade.report import eval_tsv_text, write_eval_report, write_flow_report


def test_eval_tsv_one_row_per_record():
    net = two_bus_upgrade_net()
    problem = build_problem(net)
    result = solve(net)
    report = evaluate_problem(problem, result.certificate.point)
    text = eval_tsv_text(report)
    lines = text.strip().split("\n")
    assert lines[0].startswith("record\tindex\tkind")
    assert len(lines) == 1 + len(report.records) + len(report.selection_records)
    assert all("\t" in line for line in lines)


def test_eval_report_bundle(tmp_path):
    net = two_bus_upgrade_net()
    problem = build_problem(net)
    result = solve(net)
    report = evaluate_problem(problem, result.certificate.point)
    written = write_eval_report(report, problem, tmp_path / "out")
    names = sorted(p.name for p in written)
    assert names == ["evaluation.tsv", "violations_by_family.png", "voltage_profile.png"]
    assert all(p.stat().st_size > 0 for p in written)


def test_flow_report_bundle(tmp_path):
    net = two_bus_upgrade_net()
    result = solve(net)
    pf = result.certificate.pf_results[0]
    y_upg, i_max = apply_upgrades(net, result.best_a)
    pairs = [(line.from_bus, line.to_bus) for line in net.lines]
    flows = branch_flows(y_upg, pf.v, pairs)
    currents = np.array(
        [
            abs(y_upg[l.from_bus, l.to_bus]) * abs(pf.v[l.from_bus] - pf.v[l.to_bus])
            for l in net.lines
        ]
    )
    written = write_flow_report(net, pf, flows, currents, i_max, tmp_path / "flow")
    names = sorted(p.name for p in written)
    assert names == ["flow.tsv", "line_loading.png", "voltage_profile.png"]
    tsv = (tmp_path / "flow" / "flow.tsv").read_text()
    assert tsv.count("\nbus\t") == 2
    assert tsv.count("\nflow\t") == 2
    assert tsv.count("\ncurrent\t") == 1
