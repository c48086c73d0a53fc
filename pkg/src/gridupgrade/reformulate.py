"""Constraint builders: from a network instance to the standard-form MIQCQP.

Four families are produced per scenario, in this order and each by
ascending entity id:

* voltage rows: one two-sided row per bus bounding ``|v_j|^2``,
* current rows: one one-sided row per line bounding ``|v_j - v_l|^2``
  against a cap that is linear in the upgrade vector,
* line-power rows: per directed line flow and per upgrade option a banded
  pair tying the flow variable to the quadratic power expansion for that
  option's admittance, plus a no-upgrade pair for the base admittance;
  every band is emitted as two one-sided rows because the two sides carry
  different linear terms in ``a``,
* balance rows: per bus, linear rows boxing the sum of incident directed
  flows (real and reactive separately).

Builders are pure and deterministic: identical inputs reproduce the
identical constraint list, bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import Network, require_valid, selection_system
from .qcqp import (
    Problem,
    QuadConstraint,
    SparseSymMatrix,
    VariableLayout,
    sym_triplets,
)

INF = math.inf

# Safety margin applied on top of the closed-form band-width bound.
BIG_M_MARGIN = 0.25


@dataclass(frozen=True)
class ReformOptions:
    """Knobs for problem construction.

    ``big_m_override`` replaces the computed band half-width.
    ``include_y_box_bounds`` additionally emits one-sided rows
    ``-M <= y_i`` and ``y_i <= M`` for every directed flow entry, for
    export to solvers that require explicitly bounded variables.  It is
    off by default so the constraint list contains exactly the four
    families above.
    """

    big_m_override: float | None = None
    include_y_box_bounds: bool = False

    def __post_init__(self):
        if self.big_m_override is not None and not self.big_m_override > 0:
            raise ValueError(f"big_m_override must be positive, got {self.big_m_override}")


def make_layout(net: Network) -> VariableLayout:
    return VariableLayout(
        n_bus=net.n_bus, n_line=net.n_line, n_scen=net.n_scenario, n_upg=net.n_upgrade
    )


def build_voltage_constraints(
    net: Network, layout: VariableLayout, scenario: int
) -> list[QuadConstraint]:
    """One row per bus: ``v_min^2 <= v_rj^2 + v_qj^2 <= v_max^2``."""
    rows = []
    for bus in net.buses:
        q = SparseSymMatrix(
            dim=layout.z_size,
            triplets=sym_triplets({(layout.vr(bus.id), layout.vr(bus.id)): 1.0,
                                   (layout.vq(bus.id), layout.vq(bus.id)): 1.0}),
        )
        rows.append(
            QuadConstraint(
                kind="voltage",
                scenario=scenario,
                Q=q,
                q=(),
                m=(),
                alpha=bus.v_min**2,
                beta=bus.v_max**2,
                provenance=(bus.id, "base"),
            )
        )
    return rows


def _current_cap(net: Network, line_id: int) -> tuple[float, tuple[tuple[int, float], ...]]:
    """Upper bound and decision-linear terms for one line's current row.

    The squared voltage difference is capped by ``(I_max / |Y_jl|)^2``; each
    option shifts the cap to the squared ratio of its upgraded limit and
    upgraded off-diagonal modulus.  At most one option per line is ever
    selected, which is what makes the cap linear in ``a``.
    """
    line = net.lines[line_id]
    base_mod = abs(line.y_branch)
    base_ratio_sq = (line.i_max / base_mod) ** 2
    m_entries = []
    for opt in net.upgrades_on_line(line_id):
        upg_mod = abs(line.y_branch + opt.delta_y)
        if upg_mod == 0.0:
            raise ValueError(
                f"line {line_id}: upgrade {opt.id} zeroes the off-diagonal admittance"
            )
        upg_ratio_sq = ((line.i_max + opt.delta_i) / upg_mod) ** 2
        m_entries.append((opt.id, -(upg_ratio_sq - base_ratio_sq)))
    return base_ratio_sq, tuple(sorted(m_entries))


def build_current_constraints(
    net: Network, layout: VariableLayout, scenario: int
) -> list[QuadConstraint]:
    """One one-sided row per line: ``|v_j - v_l|^2 + m' a <= u``."""
    rows = []
    for line in net.lines:
        j, l = line.from_bus, line.to_bus
        q = SparseSymMatrix(
            dim=layout.z_size,
            triplets=sym_triplets({
                (layout.vr(j), layout.vr(j)): 1.0,
                (layout.vr(l), layout.vr(l)): 1.0,
                (layout.vq(j), layout.vq(j)): 1.0,
                (layout.vq(l), layout.vq(l)): 1.0,
                (layout.vr(j), layout.vr(l)): -1.0,
                (layout.vq(j), layout.vq(l)): -1.0,
            }),
        )
        cap, m_entries = _current_cap(net, line.id)
        rows.append(
            QuadConstraint(
                kind="current",
                scenario=scenario,
                Q=q,
                q=(),
                m=m_entries,
                alpha=-INF,
                beta=cap,
                provenance=(line.id, "base"),
            )
        )
    return rows


def flow_expansion_entries(
    layout: VariableLayout, into_bus: int, other_bus: int, y_offdiag: complex
) -> tuple[dict[tuple[int, int], float], dict[tuple[int, int], float]]:
    """Quadratic coefficients of the directed complex power flow.

    The power flowing into ``into_bus`` out of its line to ``other_bus`` is
    ``v_p * conj(Y_pl * (v_l - v_p))`` with ``Y_pl`` the off-diagonal matrix
    entry.  Expanding into rectangular coordinates gives, with G + iB the
    entry, the coefficient maps returned here (real part, imaginary part).
    Cross terms are halved so they read as symmetric-matrix entries.
    """
    p, o = into_bus, other_bus
    g, b = y_offdiag.real, y_offdiag.imag
    vr_p, vq_p = layout.vr(p), layout.vq(p)
    vr_o, vq_o = layout.vr(o), layout.vq(o)
    real = {
        (vr_p, vr_p): -g,
        (vq_p, vq_p): -g,
        (vr_p, vr_o): g / 2.0,
        (vr_p, vq_o): -b / 2.0,
        (vq_p, vq_o): g / 2.0,
        (vq_p, vr_o): b / 2.0,
    }
    imag = {
        (vr_p, vr_p): b,
        (vq_p, vq_p): b,
        (vr_p, vr_o): -b / 2.0,
        (vr_p, vq_o): -g / 2.0,
        (vq_p, vq_o): -b / 2.0,
        (vq_p, vr_o): g / 2.0,
    }
    return real, imag


def _banded_pair(
    layout: VariableLayout,
    scenario: int,
    kind: str,
    entries: dict[tuple[int, int], float],
    y_index: int,
    m_lower: tuple[tuple[int, float], ...],
    m_upper: tuple[tuple[int, float], ...],
    alpha: float,
    beta: float,
    provenance: tuple[int, int | str],
) -> list[QuadConstraint]:
    # Row expression is (flow variable) - (expansion), so Q enters negated.
    q_mat = SparseSymMatrix(
        dim=layout.z_size,
        triplets=sym_triplets({pos: -v for pos, v in entries.items()}),
    )
    pick = ((y_index, 1.0),)
    lower = QuadConstraint(
        kind=kind, scenario=scenario, Q=q_mat, q=pick, m=m_lower,
        alpha=alpha, beta=INF, provenance=provenance,
    )
    upper = QuadConstraint(
        kind=kind, scenario=scenario, Q=q_mat, q=pick, m=m_upper,
        alpha=-INF, beta=beta, provenance=provenance,
    )
    return [lower, upper]


def build_line_power_constraints(
    net: Network, layout: VariableLayout, scenario: int, big_m: float
) -> list[QuadConstraint]:
    """Banded rows tying directed flow variables to their quadratic expansions.

    For option ``i`` on line ``(j, l)`` the band is
    ``-M(1 - a_i) <= flow - expansion_i <= M(1 - a_i)``: vacuous while the
    option is unselected, an equality once it is.  The no-upgrade band uses
    the base admittance and half-width ``M * sum(a_i over the line)``, so it
    collapses exactly when no option on the line is chosen.  Each band
    splits into two one-sided rows since the sides differ in their ``a``
    terms; with real and reactive components and both directions that is
    ``8 * (options + 1)`` rows per line.
    """
    if not big_m > 0:
        raise ValueError(f"big_m must be positive, got {big_m}")
    rows = []
    for line in net.lines:
        opts = net.upgrades_on_line(line.id)
        for end, (into, other) in enumerate(
            ((line.from_bus, line.to_bus), (line.to_bus, line.from_bus))
        ):
            lr_idx = layout.lr(line.id, end)
            lq_idx = layout.lq(line.id, end)
            for opt in opts:
                y_upg = -(line.y_branch + opt.delta_y)
                real, imag = flow_expansion_entries(layout, into, other, y_upg)
                for kind, entries, y_idx in (
                    ("line_power_real", real, lr_idx),
                    ("line_power_reactive", imag, lq_idx),
                ):
                    rows.extend(
                        _banded_pair(
                            layout, scenario, kind, entries, y_idx,
                            m_lower=((opt.id, -big_m),),
                            m_upper=((opt.id, big_m),),
                            alpha=-big_m,
                            beta=big_m,
                            provenance=(line.id, opt.id),
                        )
                    )
            y_base = -line.y_branch
            real, imag = flow_expansion_entries(layout, into, other, y_base)
            m_lower = tuple((opt.id, big_m) for opt in opts)
            m_upper = tuple((opt.id, -big_m) for opt in opts)
            for kind, entries, y_idx in (
                ("line_power_real", real, lr_idx),
                ("line_power_reactive", imag, lq_idx),
            ):
                rows.extend(
                    _banded_pair(
                        layout, scenario, kind, entries, y_idx,
                        m_lower=m_lower,
                        m_upper=m_upper,
                        alpha=0.0,
                        beta=0.0,
                        provenance=(line.id, "base"),
                    )
                )
    return rows


def build_power_balance_constraints(
    net: Network, layout: VariableLayout, scenario: int
) -> list[QuadConstraint]:
    """Per bus, box the summed incident directed flows inside the power bounds."""
    sc = net.scenarios[scenario]
    empty_q = SparseSymMatrix(dim=layout.z_size)
    rows = []
    for bus in net.buses:
        incident: list[int] = []
        for line in net.lines:
            if line.from_bus == bus.id:
                incident.append(2 * line.id + 0)
            elif line.to_bus == bus.id:
                incident.append(2 * line.id + 1)
        incident.sort()
        lo, hi = sc.s_min[bus.id], sc.s_max[bus.id]
        rows.append(
            QuadConstraint(
                kind="balance_real",
                scenario=scenario,
                Q=empty_q,
                q=tuple((d, 1.0) for d in incident),
                m=(),
                alpha=lo.real,
                beta=hi.real,
                provenance=(bus.id, "base"),
            )
        )
        rows.append(
            QuadConstraint(
                kind="balance_reactive",
                scenario=scenario,
                Q=empty_q,
                q=tuple((layout.y_size // 2 + d, 1.0) for d in incident),
                m=(),
                alpha=lo.imag,
                beta=hi.imag,
                provenance=(bus.id, "base"),
            )
        )
    return rows


def build_selection_constraints(net: Network) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Full selection system: user rows verbatim, then at-most-one rows per line."""
    return selection_system(net)


def compute_big_m(net: Network) -> float:
    """Band half-width large enough that unselected-option rows never bind.

    The directed flow magnitude obeys ``|v_p * conj(Y (v_o - v_p))| <=
    v_max * |Y| * 2 * v_max`` inside the voltage boxes, taken over every
    admittance configuration (base and each single upgrade), and the flow
    variables themselves stay within the same bound whenever some band pins
    them.  A 25% margin is added on top.
    """
    require_valid(net)
    v_max = max((bus.v_max for bus in net.buses), default=0.0)
    y_mod = 0.0
    for line in net.lines:
        y_mod = max(y_mod, abs(line.y_branch))
        for opt in net.upgrades_on_line(line.id):
            y_mod = max(y_mod, abs(line.y_branch + opt.delta_y))
    m = 2.0 * v_max**2 * y_mod * (1.0 + BIG_M_MARGIN)
    # Degenerate case: no lines means no banded rows; keep big_m positive.
    return m if m > 0 else 1.0


def _y_box_rows(layout: VariableLayout, scenario: int, net: Network, big_m: float) -> list[QuadConstraint]:
    empty_q = SparseSymMatrix(dim=layout.z_size)
    rows = []
    for line in net.lines:
        for end in (0, 1):
            for kind, idx in (
                ("line_power_real", layout.lr(line.id, end)),
                ("line_power_reactive", layout.lq(line.id, end)),
            ):
                pick = ((idx, 1.0),)
                rows.append(
                    QuadConstraint(
                        kind=kind, scenario=scenario, Q=empty_q, q=pick, m=(),
                        alpha=-big_m, beta=INF, provenance=(line.id, "base"),
                    )
                )
                rows.append(
                    QuadConstraint(
                        kind=kind, scenario=scenario, Q=empty_q, q=pick, m=(),
                        alpha=-INF, beta=big_m, provenance=(line.id, "base"),
                    )
                )
    return rows


def build_problem(net: Network, options: ReformOptions | None = None) -> Problem:
    """Assemble the full problem: all families for every scenario, then the
    selection system and the linear upgrade-cost objective.

    Per scenario the constraint list holds exactly
    ``n_bus + n_line + sum(8 * (opts + 1) over lines) + 2 * n_bus``
    rows, in family order voltage, current, line-power, balance (plus the
    optional flow-variable box rows at the end when enabled).
    """
    require_valid(net)
    options = options or ReformOptions()
    layout = make_layout(net)
    big_m = options.big_m_override if options.big_m_override is not None else compute_big_m(net)

    constraints: list[QuadConstraint] = []
    for k in range(net.n_scenario):
        constraints.extend(build_voltage_constraints(net, layout, k))
        constraints.extend(build_current_constraints(net, layout, k))
        constraints.extend(build_line_power_constraints(net, layout, k, big_m))
        constraints.extend(build_power_balance_constraints(net, layout, k))
        if options.include_y_box_bounds:
            constraints.extend(_y_box_rows(layout, k, net, big_m))

    a_mat, rhs, labels = selection_system(net)
    objective = np.array([u.cost for u in net.upgrades], dtype=float)
    return Problem(
        layout=layout,
        constraints=tuple(constraints),
        selection_A=a_mat,
        selection_b=rhs,
        selection_labels=tuple(labels),
        objective_c=objective,
        big_m=big_m,
    )


def scenario_row_count(net: Network) -> int:
    """Expected rows per scenario for the default four-family build."""
    line_power = sum(8 * (len(net.upgrades_on_line(line.id)) + 1) for line in net.lines)
    return net.n_bus + net.n_line + line_power + 2 * net.n_bus
