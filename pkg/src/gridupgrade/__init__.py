"""Transmission upgrade planning as a mixed-integer QCQP.

The toolkit converts planning instances (buses, lines, discrete upgrade
options, load scenarios) into a standard-form mixed-integer quadratically
constrained program, verifies candidate points against both the
reformulated rows and the original complex-domain limits, and solves
desk-scale instances exactly by binary enumeration backed by an AC
power-flow oracle.
"""

from .network import (
    Bus,
    InvalidNetworkError,
    Line,
    Network,
    Scenario,
    SelectionError,
    UpgradeOption,
    apply_upgrades,
    assemble_admittance,
    require_valid,
    selection_system,
    validate_network,
)
from .powerflow import PFConfig, PFResult, branch_flows, bus_injections, solve_newton
from .qcqp import (
    EvalReport,
    Point,
    Problem,
    QuadConstraint,
    SparseSymMatrix,
    VariableLayout,
    constraint_value,
    evaluate_constraint,
    evaluate_problem,
)
from .reformulate import (
    ReformOptions,
    build_current_constraints,
    build_line_power_constraints,
    build_power_balance_constraints,
    build_problem,
    build_selection_constraints,
    build_voltage_constraints,
    compute_big_m,
    make_layout,
    scenario_row_count,
)
from .solver import Certificate, SolveResult, enumerate_assignments, solve
from .documents import (
    DocumentError,
    parse_network,
    parse_point,
    parse_problem,
    serialize_network,
    serialize_point,
    serialize_problem,
)

__version__ = "0.1.0"

__all__ = [
    "Bus",
    "Certificate",
    "DocumentError",
    "EvalReport",
    "InvalidNetworkError",
    "Line",
    "Network",
    "PFConfig",
    "PFResult",
    "Point",
    "Problem",
    "QuadConstraint",
    "ReformOptions",
    "Scenario",
    "SelectionError",
    "SolveResult",
    "SparseSymMatrix",
    "UpgradeOption",
    "VariableLayout",
    "apply_upgrades",
    "assemble_admittance",
    "branch_flows",
    "build_current_constraints",
    "build_line_power_constraints",
    "build_power_balance_constraints",
    "build_problem",
    "build_selection_constraints",
    "build_voltage_constraints",
    "bus_injections",
    "compute_big_m",
    "constraint_value",
    "enumerate_assignments",
    "evaluate_constraint",
    "evaluate_problem",
    "make_layout",
    "parse_network",
    "parse_point",
    "parse_problem",
    "require_valid",
    "scenario_row_count",
    "selection_system",
    "serialize_network",
    "serialize_point",
    "serialize_problem",
    "solve",
    "solve_newton",
    "validate_network",
]
