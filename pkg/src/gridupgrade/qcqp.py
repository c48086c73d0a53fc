"""Standard-form mixed-integer QCQP container and point evaluation.

Every constraint is one row of

    alpha <= z' Q z + q' y + m' a <= beta

where ``z`` stacks rectangular bus voltages, ``y`` stacks directed line
power variables, and ``a`` is the binary upgrade vector.  ``z`` and ``y``
are replicated per scenario; each constraint row is bound to one scenario
(or to none, for rows over ``a`` alone).  Either bound may be infinite but
not both.

Problems and points are immutable after construction; evaluation is pure,
so reports for many candidate points may be computed concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONSTRAINT_KINDS = (
    "voltage",
    "current",
    "line_power_real",
    "line_power_reactive",
    "balance_real",
    "balance_reactive",
)


@dataclass(frozen=True)
class VariableLayout:
    """Index bookkeeping for one scenario's variable blocks.

    Per scenario, ``z`` has length ``2 * n_bus`` (real parts first, then
    imaginary parts) and ``y`` has length ``4 * n_line`` (real flows first,
    then reactive).  Each line owns two directed entries per component:
    index ``2e`` is the flow into the line's from-bus, ``2e + 1`` the flow
    into its to-bus.
    """

    n_bus: int
    n_line: int
    n_scen: int
    n_upg: int

    @property
    def z_size(self) -> int:
        return 2 * self.n_bus

    @property
    def y_size(self) -> int:
        return 4 * self.n_line

    def vr(self, j: int) -> int:
        return j

    def vq(self, j: int) -> int:
        return self.n_bus + j

    def lr(self, line: int, end: int) -> int:
        return 2 * line + end

    def lq(self, line: int, end: int) -> int:
        return 2 * self.n_line + 2 * line + end


@dataclass(frozen=True)
class SparseSymMatrix:
    """Upper triangle of a symmetric matrix in COO triplets.

    Each triplet ``(r, c, v)`` with ``r <= c`` stands for entries
    ``Q[r, c] = Q[c, r] = v``, so the quadratic form contributes
    ``v * x_r**2`` on the diagonal and ``2 * v * x_r * x_c`` off it.
    Triplets are unique per position and kept sorted by ``(r, c)``.
    """

    dim: int
    triplets: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        seen = set()
        for r, c, _ in self.triplets:
            if not (0 <= r <= c < self.dim):
                raise ValueError(f"triplet position ({r}, {c}) out of range for dim {self.dim}")
            if (r, c) in seen:
                raise ValueError(f"duplicate triplet position ({r}, {c})")
            seen.add((r, c))

    def value(self, x: np.ndarray) -> float:
        total = 0.0
        for r, c, v in self.triplets:
            if r == c:
                total += v * x[r] * x[r]
            else:
                total += 2.0 * v * x[r] * x[c]
        return total

    def dense(self) -> np.ndarray:
        q = np.zeros((self.dim, self.dim))
        for r, c, v in self.triplets:
            q[r, c] = v
            q[c, r] = v
        return q


def sym_triplets(entries: dict[tuple[int, int], float]) -> tuple[tuple[int, int, float], ...]:
    """Canonicalize a ``(row, col) -> value`` map into sorted upper triplets."""
    merged: dict[tuple[int, int], float] = {}
    for (r, c), v in entries.items():
        key = (r, c) if r <= c else (c, r)
        merged[key] = merged.get(key, 0.0) + v
    return tuple((r, c, v) for (r, c), v in sorted(merged.items()))


@dataclass(frozen=True)
class QuadConstraint:
    """One standard-form row, tagged by family and origin.

    ``q`` and ``m`` are sparse vectors stored as sorted ``(index, value)``
    pairs; indices refer to the scenario's own ``y`` block and to the global
    ``a`` vector respectively.  ``provenance`` is ``(entity id, tag)`` where
    the entity is a bus or line and the tag an upgrade id or ``"base"``.
    """

    kind: str
    scenario: int | None
    Q: SparseSymMatrix
    q: tuple[tuple[int, float], ...]
    m: tuple[tuple[int, float], ...]
    alpha: float
    beta: float
    provenance: tuple[int, int | str]

    def __post_init__(self):
        if self.kind not in CONSTRAINT_KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.alpha > self.beta:
            raise ValueError(f"crossed bounds: alpha {self.alpha} > beta {self.beta}")
        if not (np.isfinite(self.alpha) or np.isfinite(self.beta)):
            raise ValueError("constraint must have at least one finite bound")
        if self.scenario is None and (self.Q.triplets or self.q):
            raise ValueError("scenario-free rows may only involve the decision vector")


@dataclass(frozen=True)
class Problem:
    """A complete mixed-integer QCQP instance.

    ``selection_A``/``selection_b`` are the full linear system over ``a``
    (user rows plus generated at-most-one rows); ``objective_c`` the linear
    cost vector.  ``big_m`` records the band half-width the line-power rows
    were built with.
    """

    layout: VariableLayout
    constraints: tuple[QuadConstraint, ...]
    selection_A: np.ndarray
    selection_b: np.ndarray
    selection_labels: tuple[str, ...]
    objective_c: np.ndarray
    big_m: float

    def __post_init__(self):
        if not self.big_m > 0:
            raise ValueError(f"big_m must be positive, got {self.big_m}")
        for idx, c in enumerate(self.constraints):
            if c.scenario is not None and not (0 <= c.scenario < self.layout.n_scen):
                raise ValueError(f"constraint {idx}: scenario {c.scenario} out of range")
            if c.Q.dim != self.layout.z_size:
                raise ValueError(f"constraint {idx}: Q dimension {c.Q.dim} != {self.layout.z_size}")
            for i, _ in c.q:
                if not (0 <= i < self.layout.y_size):
                    raise ValueError(f"constraint {idx}: y index {i} out of range")
            for i, _ in c.m:
                if not (0 <= i < self.layout.n_upg):
                    raise ValueError(f"constraint {idx}: a index {i} out of range")


@dataclass(frozen=True)
class Point:
    """A candidate assignment: binary ``a`` plus per-scenario ``z`` and ``y``."""

    a: np.ndarray
    z: tuple[np.ndarray, ...]
    y: tuple[np.ndarray, ...]

    def matches(self, layout: VariableLayout) -> bool:
        return (
            self.a.shape == (layout.n_upg,)
            and len(self.z) == layout.n_scen
            and len(self.y) == layout.n_scen
            and all(zk.shape == (layout.z_size,) for zk in self.z)
            and all(yk.shape == (layout.y_size,) for yk in self.y)
        )


@dataclass(frozen=True)
class ConstraintRecord:
    index: int
    kind: str
    scenario: int | None
    provenance: tuple[int, int | str]
    value: float
    alpha: float
    beta: float
    violation: float
    satisfied: bool


@dataclass(frozen=True)
class SelectionRecord:
    index: int
    label: str
    value: float
    bound: float
    violation: float
    satisfied: bool


@dataclass(frozen=True)
class EvalReport:
    """Per-row evaluation of a point against a problem.

    ``feasible`` holds exactly when the decision vector is binary and the
    worst violation over all quadratic rows and selection rows is within
    tolerance.
    """

    records: tuple[ConstraintRecord, ...]
    selection_records: tuple[SelectionRecord, ...]
    objective: float
    worst_violation: float
    a_binary: bool
    feasible: bool
    tol: float


def constraint_value(constraint: QuadConstraint, point: Point) -> float:
    """Evaluate ``z' Q z + q' y + m' a`` on the constraint's scenario blocks."""
    value = 0.0
    if constraint.scenario is not None:
        if constraint.scenario >= len(point.z):
            raise ValueError(
                f"scenario index {constraint.scenario} out of range for point with {len(point.z)} scenarios"
            )
        z = point.z[constraint.scenario]
        y = point.y[constraint.scenario]
        value += constraint.Q.value(z)
        for i, v in constraint.q:
            value += v * y[i]
    for i, v in constraint.m:
        value += v * point.a[i]
    return value


def violation(value: float, alpha: float, beta: float) -> float:
    return max(alpha - value, value - beta, 0.0)


def evaluate_constraint(
    constraint: QuadConstraint, point: Point, tol: float = 1e-6
) -> tuple[float, bool]:
    """Constraint value and whether it lies within ``[alpha, beta]`` at ``tol``."""
    value = constraint_value(constraint, point)
    return value, violation(value, constraint.alpha, constraint.beta) <= tol


def evaluate_problem(problem: Problem, point: Point, tol: float = 1e-6) -> EvalReport:
    """Evaluate every quadratic row and every selection row of ``problem``.

    Records keep the constraint list order, so reports are deterministic and
    directly comparable across runs and serialization roundtrips.
    """
    if not point.matches(problem.layout):
        raise ValueError("point does not match the problem's variable layout")

    records = []
    worst = 0.0
    for idx, c in enumerate(problem.constraints):
        value = constraint_value(c, point)
        viol = violation(value, c.alpha, c.beta)
        worst = max(worst, viol)
        records.append(
            ConstraintRecord(
                index=idx,
                kind=c.kind,
                scenario=c.scenario,
                provenance=c.provenance,
                value=value,
                alpha=c.alpha,
                beta=c.beta,
                violation=viol,
                satisfied=viol <= tol,
            )
        )

    a = np.asarray(point.a, dtype=float)
    selection_records = []
    if problem.selection_A.size:
        values = problem.selection_A @ a
    else:
        values = np.zeros(len(problem.selection_b))
    for idx, (value, bound) in enumerate(zip(values, problem.selection_b)):
        viol = max(float(value) - float(bound), 0.0)
        worst = max(worst, viol)
        selection_records.append(
            SelectionRecord(
                index=idx,
                label=problem.selection_labels[idx],
                value=float(value),
                bound=float(bound),
                violation=viol,
                satisfied=viol <= tol,
            )
        )

    a_binary = bool(np.all((point.a == 0) | (point.a == 1)))
    objective = float(problem.objective_c @ a)
    return EvalReport(
        records=tuple(records),
        selection_records=tuple(selection_records),
        objective=objective,
        worst_violation=worst,
        a_binary=a_binary,
        feasible=a_binary and worst <= tol,
        tol=tol,
    )
