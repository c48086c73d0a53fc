"""Exact desk-scale solver by binary enumeration plus a power-flow oracle.

Candidate upgrade vectors satisfying the selection system are visited in
ascending objective order (lexicographic tie-break).  For each candidate,
every scenario is solved by the Newton oracle with its pinned injections;
the voltage boxes, current limits and slack power bounds of the original
complex-domain formulation are then checked on the converged profile.  The
first candidate certified feasible for all scenarios is the optimum; its
certificate point is then re-verified against the reformulated problem,
and the two checks must agree.

A candidate whose power flow fails to converge is logged as "no
certificate found" and skipped: the per-candidate feasibility problem is
nonconvex, so a local oracle can certify feasibility but never prove
emptiness.  An exhausted search therefore reports
``infeasible-no-certificate`` rather than claiming infeasibility.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .network import Network, apply_upgrades, require_valid, selection_system
from .powerflow import PFConfig, PFResult, branch_flows, solve_newton
from .qcqp import EvalReport, Point, evaluate_problem
from .reformulate import ReformOptions, build_problem

# Beyond this many binary variables, full enumeration stops being a desk
# exercise; export the problem document to an external solver instead.
ENUMERATION_CAP = 20


@dataclass(frozen=True)
class CandidateLog:
    """Outcome of checking one upgrade vector."""

    a: tuple[int, ...]
    cost: float
    feasible: bool
    detail: str


@dataclass(frozen=True)
class Certificate:
    """A concrete feasible point: decisions, voltages and flows, plus the
    evaluation of that point against the reformulated problem."""

    a: np.ndarray
    point: Point
    eval: EvalReport
    pf_results: tuple[PFResult, ...]


@dataclass(frozen=True)
class SolveResult:
    status: str  # "optimal" | "infeasible-no-certificate" | "error"
    best_a: np.ndarray | None
    objective: float | None
    certificate: Certificate | None
    explored: int
    log: tuple[CandidateLog, ...]


def enumerate_assignments(
    a_mat: np.ndarray, rhs: np.ndarray, n_upg: int
) -> list[np.ndarray]:
    """All binary vectors with ``A a <= b``, as little-endian integers ascending.

    Bit 0 of the enumeration integer is ``a_0``, so for two variables the
    order is 00, 10, 01, 11 (before filtering).
    """
    if n_upg > ENUMERATION_CAP:
        raise ValueError(
            f"{n_upg} binary variables exceed the enumeration cap of "
            f"{ENUMERATION_CAP}; export the problem document to an external solver"
        )
    rhs = np.asarray(rhs, dtype=float)
    a_mat = np.asarray(a_mat, dtype=float).reshape(len(rhs), n_upg)
    out = []
    for code in range(2**n_upg):
        a = np.array([(code >> i) & 1 for i in range(n_upg)], dtype=int)
        if a_mat.size and np.any(a_mat @ a > rhs + 1e-9):
            continue
        out.append(a)
    return out


def _check_scenario(
    net: Network,
    scenario_idx: int,
    y_upg: np.ndarray,
    i_max_upg: np.ndarray,
    tol: float,
    pf_cfg: PFConfig,
) -> tuple[PFResult, str | None]:
    """Run the oracle for one scenario and check the complex-domain limits.

    Returns the power-flow result and ``None`` on success, or a message
    naming the first failed check.
    """
    sc = net.scenarios[scenario_idx]
    injections = np.array(sc.s_min, dtype=complex)
    result = solve_newton(y_upg, injections, (sc.slack_bus, sc.slack_voltage), pf_cfg)
    tag = f"scenario {sc.id}"
    if not result.converged:
        note = f" ({result.message})" if result.message else ""
        return result, f"{tag}: no certificate found, power flow did not converge{note}"

    v = result.v
    for bus in net.buses:
        mag = abs(v[bus.id])
        if mag < bus.v_min - tol or mag > bus.v_max + tol:
            return result, (
                f"{tag}: voltage bound violated at bus {bus.id} "
                f"(|v| = {mag:.6g}, box [{bus.v_min:g}, {bus.v_max:g}])"
            )
    for line in net.lines:
        current = abs(y_upg[line.from_bus, line.to_bus]) * abs(v[line.from_bus] - v[line.to_bus])
        if current > i_max_upg[line.id] + tol:
            return result, (
                f"{tag}: current limit exceeded on line {line.id} "
                f"({current:.6g} > {i_max_upg[line.id]:g})"
            )
    s_slack = result.slack_injection
    lo, hi = sc.s_min[sc.slack_bus], sc.s_max[sc.slack_bus]
    if (
        s_slack.real < lo.real - tol
        or s_slack.real > hi.real + tol
        or s_slack.imag < lo.imag - tol
        or s_slack.imag > hi.imag + tol
    ):
        return result, (
            f"{tag}: slack injection {s_slack:.6g} outside bounds "
            f"[{lo:g}, {hi:g}]"
        )
    return result, None


def _evaluate_candidate(
    net: Network, a: np.ndarray, tol: float, pf_cfg: PFConfig
) -> tuple[str | None, tuple[PFResult, ...]]:
    y_upg, i_max_upg = apply_upgrades(net, a)
    results = []
    for k in range(net.n_scenario):
        result, failure = _check_scenario(net, k, y_upg, i_max_upg, tol, pf_cfg)
        results.append(result)
        if failure is not None:
            return failure, tuple(results)
    return None, tuple(results)


def assemble_point(net: Network, a: np.ndarray, pf_results: tuple[PFResult, ...]) -> Point:
    """Build the certificate point from converged voltages and branch flows."""
    y_upg, _ = apply_upgrades(net, a)
    pairs = [(line.from_bus, line.to_bus) for line in net.lines]
    z_blocks = []
    y_blocks = []
    for result in pf_results:
        v = result.v
        z_blocks.append(np.concatenate([v.real, v.imag]))
        flows = branch_flows(y_upg, v, pairs)
        n_line = net.n_line
        y_vec = np.zeros(4 * n_line)
        for e in range(n_line):
            y_vec[2 * e] = flows[e, 0].real
            y_vec[2 * e + 1] = flows[e, 1].real
            y_vec[2 * n_line + 2 * e] = flows[e, 0].imag
            y_vec[2 * n_line + 2 * e + 1] = flows[e, 1].imag
        y_blocks.append(y_vec)
    return Point(a=np.asarray(a, dtype=int), z=tuple(z_blocks), y=tuple(y_blocks))


def solve(
    net: Network,
    options: ReformOptions | None = None,
    tol: float = 1e-6,
    jobs: int = 1,
    pf_cfg: PFConfig = PFConfig(),
) -> SolveResult:
    """Minimum-cost upgrade plan by exhaustive certified search.

    Every scenario must pin its injections (``s_min == s_max``) at all
    non-slack buses; range-valued injections stay expressible in the
    exported problem but are not searched here.  ``explored`` counts the
    candidates actually checked: the search stops at the first certified
    one, which the visit order makes optimal.  With ``jobs > 1`` candidates
    are checked in parallel batches; the outcome is order-independent
    because selection always takes the earliest feasible candidate in the
    visit order.
    """
    require_valid(net)
    for sc in net.scenarios:
        for j in range(net.n_bus):
            if j == sc.slack_bus:
                continue
            if sc.s_min[j] != sc.s_max[j]:
                raise ValueError(
                    f"scenario {sc.id}: injections at bus {j} are not pinned "
                    "(the enumeration oracle requires s_min == s_max at non-slack buses)"
                )

    problem = build_problem(net, options)
    costs = problem.objective_c

    a_mat, rhs, _ = selection_system(net)
    candidates = enumerate_assignments(a_mat, rhs, net.n_upgrade)
    candidates.sort(key=lambda a: (float(costs @ a), tuple(a)))

    log: list[CandidateLog] = []
    best: tuple[np.ndarray, tuple[PFResult, ...]] | None = None

    batch = max(1, jobs)
    with ThreadPoolExecutor(max_workers=batch) as pool:
        for start in range(0, len(candidates), batch):
            chunk = candidates[start : start + batch]
            outcomes = list(
                pool.map(lambda a: _evaluate_candidate(net, a, tol, pf_cfg), chunk)
            )
            for a, (failure, pf_results) in zip(chunk, outcomes):
                cost = float(costs @ a)
                if failure is None:
                    log.append(CandidateLog(tuple(int(x) for x in a), cost, True, "feasible"))
                    if best is None:
                        best = (a, pf_results)
                else:
                    log.append(CandidateLog(tuple(int(x) for x in a), cost, False, failure))
                if best is not None:
                    break
            if best is not None:
                break

    if best is None:
        return SolveResult(
            status="infeasible-no-certificate",
            best_a=None,
            objective=None,
            certificate=None,
            explored=len(log),
            log=tuple(log),
        )

    a_best, pf_results = best
    point = assemble_point(net, a_best, pf_results)
    report = evaluate_problem(problem, point, tol)
    certificate = Certificate(
        a=np.asarray(a_best, dtype=int), point=point, eval=report, pf_results=pf_results
    )
    if not report.feasible:
        # The oracle certified the original constraints but the reformulated
        # problem disagrees; surface this instead of claiming optimality.
        return SolveResult(
            status="error",
            best_a=np.asarray(a_best, dtype=int),
            objective=float(costs @ a_best),
            certificate=certificate,
            explored=len(log),
            log=tuple(
                log
                + [
                    CandidateLog(
                        tuple(int(x) for x in a_best),
                        float(costs @ a_best),
                        False,
                        f"reformulated check disagrees (worst violation {report.worst_violation:.3e})",
                    )
                ]
            ),
        )
    return SolveResult(
        status="optimal",
        best_a=np.asarray(a_best, dtype=int),
        objective=float(costs @ a_best),
        certificate=certificate,
        explored=len(log),
        log=tuple(log),
    )
