"""Command-line surface for the upgrade-planning toolkit.

Subcommands::

    build <net> -o <prob>      construct the MIQCQP and serialize it
    export <net> -o <prob>     alias of build, for pipeline clarity
    check <prob> <point>       evaluate a point document, emit the report
    solve <net>                enumerate upgrade plans, write a certificate
    flow <net>                 run the power-flow oracle for one scenario

Exit codes are a stable contract: 0 on success / feasible, 1 when a point
is violated, a solve is infeasible, or a power flow does not converge,
and 2 on input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import documents, report
from .network import (
    InvalidNetworkError,
    Network,
    SelectionError,
    apply_upgrades,
)
from .powerflow import branch_flows, solve_newton
from .qcqp import evaluate_problem
from .reformulate import ReformOptions, build_problem
from .solver import solve


def _read(path: str) -> str:
    return Path(path).read_text()


def _parse_bits(text: str, n_upg: int) -> np.ndarray:
    if len(text) != n_upg or any(ch not in "01" for ch in text):
        raise ValueError(
            f"decision bitstring must be {n_upg} characters of 0/1, got {text!r}"
        )
    return np.array([int(ch) for ch in text], dtype=int)


def _bits(a: np.ndarray) -> str:
    return "".join(str(int(v)) for v in a)


def _reform_options(args: argparse.Namespace) -> ReformOptions:
    return ReformOptions(big_m_override=args.big_m)


def cmd_build(args: argparse.Namespace) -> int:
    net = documents.parse_network(_read(args.network), strict=args.strict)
    problem = build_problem(net, _reform_options(args))
    Path(args.output).write_text(documents.serialize_problem(problem))
    print(
        f"wrote {args.output}: {len(problem.constraints)} constraints, "
        f"{len(problem.selection_b)} selection rows, big-M {problem.big_m:g}"
    )
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    problem = documents.parse_problem(_read(args.problem), strict=args.strict)
    point = documents.parse_point(_read(args.point), problem.layout, strict=args.strict)
    result = evaluate_problem(problem, point, tol=args.tol)
    if args.report:
        written = report.write_eval_report(result, problem, args.report)
        for path in written:
            print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(report.eval_tsv_text(result))
    print(f"objective\t{result.objective:.12g}")
    print(f"worst_violation\t{result.worst_violation:.12g}")
    print(f"feasible\t{str(result.feasible).lower()}")
    return 0 if result.feasible else 1


def cmd_solve(args: argparse.Namespace) -> int:
    net = documents.parse_network(_read(args.network), strict=args.strict)
    result = solve(net, _reform_options(args), tol=args.tol, jobs=args.jobs)
    for entry in result.log:
        verdict = "feasible" if entry.feasible else entry.detail
        print(f"candidate a={_bits(np.array(entry.a))} cost={entry.cost:g}: {verdict}")
    print(f"status\t{result.status}")
    print(f"explored\t{result.explored}")
    if result.status != "optimal":
        return 1
    print(f"a\t{_bits(result.best_a)}")
    print(f"objective\t{result.objective:.12g}")
    cert_path = args.certificate or str(Path(args.network).with_suffix(".certificate.json"))
    Path(cert_path).write_text(documents.serialize_point(result.certificate.point))
    print(f"certificate\t{cert_path}")
    return 0


def cmd_flow(args: argparse.Namespace) -> int:
    net = documents.parse_network(_read(args.network), strict=args.strict)
    if not (0 <= args.scenario < net.n_scenario):
        raise ValueError(f"scenario {args.scenario} out of range (network has {net.n_scenario})")
    a = (
        _parse_bits(args.a, net.n_upgrade)
        if args.a is not None
        else np.zeros(net.n_upgrade, dtype=int)
    )
    sc = net.scenarios[args.scenario]
    for j in range(net.n_bus):
        if j != sc.slack_bus and sc.s_min[j] != sc.s_max[j]:
            raise ValueError(
                f"scenario {sc.id}: injections at bus {j} are not pinned; "
                "the power-flow oracle needs fixed injections"
            )
    y_upg, i_max_upg = apply_upgrades(net, a)
    result = solve_newton(
        y_upg, np.array(sc.s_min, dtype=complex), (sc.slack_bus, sc.slack_voltage)
    )
    pairs = [(line.from_bus, line.to_bus) for line in net.lines]
    flows = branch_flows(y_upg, result.v, pairs)
    currents = np.array(
        [
            abs(y_upg[l.from_bus, l.to_bus]) * abs(result.v[l.from_bus] - result.v[l.to_bus])
            for l in net.lines
        ]
    )

    print(f"converged\t{str(result.converged).lower()}")
    print(f"iterations\t{result.iterations}")
    print(f"mismatch\t{result.mismatch_norm:.3e}")
    if result.message:
        print(f"note\t{result.message}")
    for bus in net.buses:
        v = result.v[bus.id]
        print(f"bus {bus.id}\tv = {v.real:.6f} {v.imag:+.6f}j\t|v| = {abs(v):.6f}")
    for line in net.lines:
        s_from, s_to = flows[line.id, 0], flows[line.id, 1]
        print(
            f"line {line.id} ({line.from_bus},{line.to_bus})\t"
            f"into {line.from_bus}: {s_from.real:+.6f} {s_from.imag:+.6f}j\t"
            f"into {line.to_bus}: {s_to.real:+.6f} {s_to.imag:+.6f}j\t"
            f"current {currents[line.id]:.6f} / limit {i_max_upg[line.id]:g}"
        )
    print(f"slack injection\t{result.slack_injection.real:+.6f} {result.slack_injection.imag:+.6f}j")
    if args.report:
        written = report.write_flow_report(
            net, result, flows, currents, i_max_upg, args.report
        )
        for path in written:
            print(f"wrote {path}", file=sys.stderr)
    return 0 if result.converged else 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridupgrade",
        description="AC transmission upgrade planning as a mixed-integer QCQP",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--strict",
            action=argparse.BooleanOptionalAction,
            default=True,
            help="reject unknown document fields (default on)",
        )

    p_build = sub.add_parser(
        "build", aliases=["export"], help="construct and serialize the MIQCQP"
    )
    p_build.add_argument("network", help="network document path")
    p_build.add_argument("-o", "--output", required=True, help="problem document path")
    p_build.add_argument("--big-m", type=float, default=None, help="override the computed big-M")
    common(p_build)
    p_build.set_defaults(func=cmd_build)

    p_check = sub.add_parser("check", help="evaluate a point against a problem document")
    p_check.add_argument("problem", help="problem document path")
    p_check.add_argument("point", help="point document path")
    p_check.add_argument("--tol", type=float, default=1e-6, help="violation tolerance")
    p_check.add_argument(
        "--report", default=None, help="directory for the TSV report and figures"
    )
    common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_solve = sub.add_parser("solve", help="exact solve by binary enumeration")
    p_solve.add_argument("network", help="network document path")
    p_solve.add_argument("--tol", type=float, default=1e-6, help="violation tolerance")
    p_solve.add_argument("--jobs", type=int, default=1, help="parallel candidate checks")
    p_solve.add_argument("--big-m", type=float, default=None, help="override the computed big-M")
    p_solve.add_argument(
        "-o", "--certificate", default=None,
        help="certificate output path (default: next to the network document)",
    )
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_flow = sub.add_parser("flow", help="run the power-flow oracle for one scenario")
    p_flow.add_argument("network", help="network document path")
    p_flow.add_argument("--scenario", type=int, default=0, help="scenario index")
    p_flow.add_argument("--a", default=None, help="upgrade decisions as a 0/1 bitstring")
    p_flow.add_argument(
        "--report", default=None, help="directory for the TSV report and figures"
    )
    common(p_flow)
    p_flow.set_defaults(func=cmd_flow)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        documents.DocumentError,
        InvalidNetworkError,
        SelectionError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
