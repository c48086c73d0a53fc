"""Physical network instance data and admittance assembly.

A network is a set of buses joined by lines with complex branch admittances,
plus a catalogue of discrete line upgrade options and one or more load
scenarios.  The bus admittance matrix is a graph Laplacian: every branch
stamps ``-y`` on its off-diagonal pair and ``+y`` on both incident diagonals,
so rows sum to zero.  Shunt elements are deliberately unsupported; the
per-line flow decomposition used by the constraint builders is exact only
for zero-row-sum matrices.

All quantities are per-unit.  Functions here are pure and operate on
immutable inputs, so they are safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvalidNetworkError(ValueError):
    """Raised when an operation requires a well-formed network and the
    validation report is non-empty."""

    def __init__(self, issues: list[str]):
        self.issues = issues
        super().__init__("invalid network: " + "; ".join(issues))


class SelectionError(ValueError):
    """Raised when an upgrade decision vector violates the selection system."""


@dataclass(frozen=True)
class Bus:
    """A network node with a per-unit voltage magnitude box."""

    id: int
    v_min: float
    v_max: float


@dataclass(frozen=True)
class Line:
    """An edge between two buses.

    ``y_branch`` is the complex series admittance of the branch and
    ``i_max`` the per-unit current magnitude limit.  A line is identified
    by its unordered bus pair; at most one line may join a given pair
    (parallel circuits are modelled by summing their admittances).
    """

    id: int
    from_bus: int
    to_bus: int
    y_branch: complex
    i_max: float


@dataclass(frozen=True)
class UpgradeOption:
    """A discrete reinforcement of one line.

    Selecting the option adds ``delta_y`` to the line's branch admittance
    and ``delta_i`` to its current limit, at the given cost.
    """

    id: int
    line_id: int
    delta_y: complex
    delta_i: float
    cost: float


@dataclass(frozen=True)
class Scenario:
    """One load/generation snapshot.

    ``s_min``/``s_max`` are per-bus complex power bounds read componentwise:
    the real parts bound active power, the imaginary parts bound reactive
    power.  The slack bus designation is used by the power-flow oracle,
    which holds that bus at ``slack_voltage`` with zero angle.
    """

    id: int
    s_min: tuple[complex, ...]
    s_max: tuple[complex, ...]
    slack_bus: int
    slack_voltage: float


@dataclass(frozen=True)
class Network:
    """A complete planning instance.

    ``selection_A``/``selection_b`` hold user-supplied linear rows over the
    binary upgrade vector (``A a <= b``).  Rows enforcing "at most one
    upgrade per line" are not stored; they are generated deterministically
    by :func:`selection_system` and appended after the user rows wherever
    the selection system is consumed.
    """

    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    upgrades: tuple[UpgradeOption, ...] = ()
    scenarios: tuple[Scenario, ...] = ()
    selection_A: tuple[tuple[float, ...], ...] = ()
    selection_b: tuple[float, ...] = ()

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_line(self) -> int:
        return len(self.lines)

    @property
    def n_upgrade(self) -> int:
        return len(self.upgrades)

    @property
    def n_scenario(self) -> int:
        return len(self.scenarios)

    def upgrades_on_line(self, line_id: int) -> tuple[UpgradeOption, ...]:
        return tuple(u for u in self.upgrades if u.line_id == line_id)


def validate_network(net: Network) -> list[str]:
    """Check every structural invariant and return the list of violations.

    An empty report means the network is well-formed.  The report names the
    offending entity for each issue; nothing raises here.
    """
    issues: list[str] = []
    n = net.n_bus

    for pos, bus in enumerate(net.buses):
        if bus.id != pos:
            issues.append(f"bus ids must be dense 0..{n - 1}; found id {bus.id} at position {pos}")
        if not (0.0 < bus.v_min <= bus.v_max):
            issues.append(f"bus {bus.id}: requires 0 < v_min <= v_max, got [{bus.v_min}, {bus.v_max}]")

    seen_pairs: dict[tuple[int, int], int] = {}
    for pos, line in enumerate(net.lines):
        if line.id != pos:
            issues.append(f"line ids must be dense 0..{net.n_line - 1}; found id {line.id} at position {pos}")
        if not (0 <= line.from_bus < n) or not (0 <= line.to_bus < n):
            issues.append(f"line {line.id}: endpoint bus out of range")
            continue
        if line.from_bus == line.to_bus:
            issues.append(f"line {line.id}: self-loop at bus {line.from_bus}")
            continue
        if line.from_bus > line.to_bus:
            issues.append(f"line {line.id}: endpoints must satisfy from_bus < to_bus")
        pair = (min(line.from_bus, line.to_bus), max(line.from_bus, line.to_bus))
        if pair in seen_pairs:
            issues.append(f"line {line.id}: duplicate of line {seen_pairs[pair]} between buses {pair}")
        seen_pairs[pair] = line.id
        if line.y_branch == 0:
            issues.append(f"line {line.id}: zero branch admittance")
        if not line.i_max > 0:
            issues.append(f"line {line.id}: i_max must be positive, got {line.i_max}")

    for pos, upg in enumerate(net.upgrades):
        if upg.id != pos:
            issues.append(f"upgrade ids must be dense 0..{net.n_upgrade - 1}; found id {upg.id} at position {pos}")
        if not (0 <= upg.line_id < net.n_line):
            issues.append(f"upgrade {upg.id}: references missing line {upg.line_id}")
            continue
        if upg.delta_i < 0:
            issues.append(f"upgrade {upg.id}: delta_i must be nonnegative, got {upg.delta_i}")
        if upg.cost < 0:
            issues.append(f"upgrade {upg.id}: cost must be nonnegative, got {upg.cost}")
        if abs(net.lines[upg.line_id].y_branch + upg.delta_y) == 0:
            issues.append(f"upgrade {upg.id}: would zero out the branch admittance of line {upg.line_id}")

    for row_idx, row in enumerate(net.selection_A):
        if len(row) != net.n_upgrade:
            issues.append(
                f"selection row {row_idx}: has {len(row)} coefficients, expected {net.n_upgrade}"
            )
    if len(net.selection_b) != len(net.selection_A):
        issues.append(
            f"selection system: {len(net.selection_A)} rows but {len(net.selection_b)} right-hand sides"
        )

    for pos, sc in enumerate(net.scenarios):
        if sc.id != pos:
            issues.append(f"scenario ids must be dense 0..{net.n_scenario - 1}; found id {sc.id} at position {pos}")
        if len(sc.s_min) != n or len(sc.s_max) != n:
            issues.append(f"scenario {sc.id}: power bounds must cover all {n} buses")
            continue
        for j in range(n):
            lo, hi = sc.s_min[j], sc.s_max[j]
            if lo.real > hi.real or lo.imag > hi.imag:
                issues.append(f"scenario {sc.id}: bus {j} has crossed power bounds")
            if not (np.isfinite(lo.real) or np.isfinite(hi.real)):
                issues.append(f"scenario {sc.id}: bus {j} active-power box has no finite side")
            if not (np.isfinite(lo.imag) or np.isfinite(hi.imag)):
                issues.append(f"scenario {sc.id}: bus {j} reactive-power box has no finite side")
        if not (0 <= sc.slack_bus < n):
            issues.append(f"scenario {sc.id}: slack bus {sc.slack_bus} out of range")
        elif not (net.buses[sc.slack_bus].v_min <= sc.slack_voltage <= net.buses[sc.slack_bus].v_max):
            issues.append(
                f"scenario {sc.id}: slack voltage {sc.slack_voltage} outside the box of bus {sc.slack_bus}"
            )

    return issues


def require_valid(net: Network) -> None:
    """Raise :class:`InvalidNetworkError` unless the validation report is empty."""
    issues = validate_network(net)
    if issues:
        raise InvalidNetworkError(issues)


def _stamp(matrix: np.ndarray, j: int, l: int, y: complex) -> None:
    # Stamp both triangles from one value so symmetry holds exactly.
    matrix[j, l] -= y
    matrix[l, j] -= y
    matrix[j, j] += y
    matrix[l, l] += y


def assemble_admittance(net: Network) -> np.ndarray:
    """Build the N x N complex bus admittance matrix from the base branches.

    Every row sums to zero (no shunts), and the matrix equals its transpose
    exactly because each branch stamps both triangles from the same value.
    """
    require_valid(net)
    y = np.zeros((net.n_bus, net.n_bus), dtype=complex)
    for line in net.lines:
        _stamp(y, line.from_bus, line.to_bus, line.y_branch)
    return y


def selection_system(net: Network) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Return the full selection system ``(A, b, labels)`` over the upgrade vector.

    User rows come first, verbatim and unde-duplicated.  For every line
    carrying two or more options an at-most-one row is appended (single-option
    lines need none: binarity already implies ``a_i <= 1``).
    """
    rows = [tuple(float(c) for c in row) for row in net.selection_A]
    rhs = [float(v) for v in net.selection_b]
    labels = [f"user[{i}]" for i in range(len(rows))]
    for line in net.lines:
        opts = net.upgrades_on_line(line.id)
        if len(opts) >= 2:
            row = [0.0] * net.n_upgrade
            for opt in opts:
                row[opt.id] = 1.0
            rows.append(tuple(row))
            rhs.append(1.0)
            labels.append(f"at-most-one(line {line.id})")
    a_mat = np.array(rows, dtype=float).reshape(len(rows), net.n_upgrade)
    return a_mat, np.array(rhs, dtype=float), labels


def check_selection(net: Network, a: np.ndarray) -> None:
    """Reject ``a`` unless it is binary and satisfies every selection row.

    The error names the first violated row by index and label.
    """
    a = np.asarray(a)
    if a.shape != (net.n_upgrade,):
        raise SelectionError(f"decision vector has length {a.size}, expected {net.n_upgrade}")
    if not np.all((a == 0) | (a == 1)):
        raise SelectionError(f"decision vector is not binary: {a.tolist()}")
    a_mat, rhs, labels = selection_system(net)
    if a_mat.size:
        values = a_mat @ a.astype(float)
        for i, (val, bound) in enumerate(zip(values, rhs)):
            if val > bound + 1e-9:
                raise SelectionError(
                    f"selection row {i} ({labels[i]}) violated: {val:g} > {bound:g}"
                )


def apply_upgrades(net: Network, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Admittance matrix and per-line current limits under decision ``a``.

    Selected options replace their line's branch admittance by
    ``y_branch + delta_y`` and raise its limit by ``delta_i``.  ``a`` must be
    binary and satisfy the selection system (at most one option per line).
    """
    require_valid(net)
    a = np.asarray(a)
    check_selection(net, a)

    y_branch = [line.y_branch for line in net.lines]
    i_max = np.array([line.i_max for line in net.lines], dtype=float)
    for upg in net.upgrades:
        if a[upg.id]:
            y_branch[upg.line_id] = y_branch[upg.line_id] + upg.delta_y
            i_max[upg.line_id] += upg.delta_i

    y = np.zeros((net.n_bus, net.n_bus), dtype=complex)
    for line, yb in zip(net.lines, y_branch):
        _stamp(y, line.from_bus, line.to_bus, yb)
    return y, i_max
