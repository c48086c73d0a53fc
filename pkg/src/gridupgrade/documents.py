"""Versioned text documents for networks, problems and candidate points.

All three formats are JSON with a fixed key order, a ``"version": "1"``
marker, and strict parsing: unknown fields are rejected so that silent
schema drift cannot mask builder regressions.  Serialization is canonical
(floats use the shortest round-trip decimal, at most 17 significant
digits, and infinite bounds become ``null``), so serialize/parse/serialize
is byte-identical and a parsed problem evaluates bit-equal to the
original.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .network import Bus, Line, Network, Scenario, UpgradeOption, require_valid
from .qcqp import (
    Point,
    Problem,
    QuadConstraint,
    SparseSymMatrix,
    VariableLayout,
)

FORMAT_VERSION = "1"


class DocumentError(ValueError):
    """Malformed document: syntax, schema, or version problems."""


def _load_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"{what}: syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def _check_keys(obj: Any, required: tuple[str, ...], context: str, strict: bool) -> None:
    if not isinstance(obj, dict):
        raise DocumentError(f"{context}: expected an object, got {type(obj).__name__}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise DocumentError(f"{context}: missing fields {missing}")
    if strict:
        unknown = [k for k in obj if k not in required]
        if unknown:
            raise DocumentError(f"{context}: unknown fields {unknown}")


def _check_version(obj: dict, what: str) -> None:
    if obj.get("version") != FORMAT_VERSION:
        raise DocumentError(
            f"{what}: unsupported version {obj.get('version')!r}, expected {FORMAT_VERSION!r}"
        )


def _number(value: Any, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(f"{context}: expected a number, got {value!r}")
    if math.isnan(value):
        raise DocumentError(f"{context}: NaN is not allowed")
    return float(value)


def _integer(value: Any, context: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(f"{context}: expected an integer, got {value!r}")
    return value


def _complex_pair(value: Any, context: str) -> complex:
    if not (isinstance(value, list) and len(value) == 2):
        raise DocumentError(f"{context}: expected [re, im]")
    return complex(_number(value[0], context), _number(value[1], context))


def _bound(value: Any, context: str, sign: float) -> float:
    # null encodes the infinite side of a one-sided box.
    if value is None:
        return sign * math.inf
    return _number(value, context)


def _bound_out(value: float) -> float | None:
    return None if math.isinf(value) else value


def _dense_ids(items: list[dict], what: str) -> list[dict]:
    """Entities may appear in any order but ids must cover 0..n-1 exactly."""
    ids = [item["id"] for item in items]
    if sorted(ids) != list(range(len(items))):
        raise DocumentError(f"{what}: ids must be dense 0..{len(items) - 1}, got {sorted(ids)}")
    return sorted(items, key=lambda item: item["id"])


# -- network documents -------------------------------------------------------

def parse_network(text: str, strict: bool = True) -> Network:
    """Parse and validate a network document.

    Entity ids may appear in any order; the returned network stores them
    sorted.  Validation failures raise with the offending entity named.
    """
    doc = _load_json(text, "network document")
    _check_keys(
        doc,
        ("version", "buses", "lines", "upgrades", "selection", "scenarios"),
        "network document",
        strict,
    )
    _check_version(doc, "network document")

    buses = []
    for i, item in enumerate(doc["buses"]):
        ctx = f"buses[{i}]"
        _check_keys(item, ("id", "v_min", "v_max"), ctx, strict)
        buses.append(
            Bus(
                id=_integer(item["id"], ctx),
                v_min=_number(item["v_min"], ctx),
                v_max=_number(item["v_max"], ctx),
            )
        )
    buses.sort(key=lambda b: b.id)
    _dense_ids([{"id": b.id} for b in buses], "buses")

    lines = []
    for i, item in enumerate(doc["lines"]):
        ctx = f"lines[{i}]"
        _check_keys(item, ("id", "from", "to", "y", "i_max"), ctx, strict)
        lines.append(
            Line(
                id=_integer(item["id"], ctx),
                from_bus=_integer(item["from"], ctx),
                to_bus=_integer(item["to"], ctx),
                y_branch=_complex_pair(item["y"], ctx),
                i_max=_number(item["i_max"], ctx),
            )
        )
    lines.sort(key=lambda l: l.id)
    _dense_ids([{"id": l.id} for l in lines], "lines")

    upgrades = []
    for i, item in enumerate(doc["upgrades"]):
        ctx = f"upgrades[{i}]"
        _check_keys(item, ("id", "line", "delta_y", "delta_i", "cost"), ctx, strict)
        line_id = _integer(item["line"], ctx)
        if not (0 <= line_id < len(lines)):
            raise DocumentError(
                f"{ctx} (upgrade {item['id']}): references line {line_id} "
                f"but only {len(lines)} lines exist"
            )
        upgrades.append(
            UpgradeOption(
                id=_integer(item["id"], ctx),
                line_id=line_id,
                delta_y=_complex_pair(item["delta_y"], ctx),
                delta_i=_number(item["delta_i"], ctx),
                cost=_number(item["cost"], ctx),
            )
        )
    upgrades.sort(key=lambda u: u.id)
    _dense_ids([{"id": u.id} for u in upgrades], "upgrades")

    selection_rows = []
    selection_rhs = []
    for i, item in enumerate(doc["selection"]):
        ctx = f"selection[{i}]"
        _check_keys(item, ("coeffs", "rhs"), ctx, strict)
        row = tuple(_number(v, ctx) for v in item["coeffs"])
        if len(row) != len(upgrades):
            raise DocumentError(
                f"{ctx}: {len(row)} coefficients for {len(upgrades)} upgrade options"
            )
        selection_rows.append(row)
        selection_rhs.append(_number(item["rhs"], ctx))

    scenarios = []
    for i, item in enumerate(doc["scenarios"]):
        ctx = f"scenarios[{i}]"
        _check_keys(item, ("id", "slack", "s_bounds"), ctx, strict)
        _check_keys(item["slack"], ("bus", "v"), f"{ctx}.slack", strict)
        bounds = item["s_bounds"]
        if len(bounds) != len(buses):
            raise DocumentError(f"{ctx}: s_bounds must have one entry per bus")
        s_min = []
        s_max = []
        for j, box in enumerate(bounds):
            bctx = f"{ctx}.s_bounds[{j}]"
            _check_keys(box, ("p_min", "p_max", "q_min", "q_max"), bctx, strict)
            s_min.append(
                complex(_bound(box["p_min"], bctx, -1.0), _bound(box["q_min"], bctx, -1.0))
            )
            s_max.append(
                complex(_bound(box["p_max"], bctx, 1.0), _bound(box["q_max"], bctx, 1.0))
            )
        scenarios.append(
            Scenario(
                id=_integer(item["id"], ctx),
                s_min=tuple(s_min),
                s_max=tuple(s_max),
                slack_bus=_integer(item["slack"]["bus"], ctx),
                slack_voltage=_number(item["slack"]["v"], ctx),
            )
        )
    scenarios.sort(key=lambda s: s.id)
    _dense_ids([{"id": s.id} for s in scenarios], "scenarios")

    net = Network(
        buses=tuple(buses),
        lines=tuple(lines),
        upgrades=tuple(upgrades),
        scenarios=tuple(scenarios),
        selection_A=tuple(selection_rows),
        selection_b=tuple(selection_rhs),
    )
    require_valid(net)
    return net


def serialize_network(net: Network) -> str:
    """Canonical text form of a network instance."""
    doc = {
        "version": FORMAT_VERSION,
        "buses": [
            {"id": int(b.id), "v_min": float(b.v_min), "v_max": float(b.v_max)}
            for b in net.buses
        ],
        "lines": [
            {
                "id": int(l.id),
                "from": int(l.from_bus),
                "to": int(l.to_bus),
                "y": [complex(l.y_branch).real, complex(l.y_branch).imag],
                "i_max": float(l.i_max),
            }
            for l in net.lines
        ],
        "upgrades": [
            {
                "id": int(u.id),
                "line": int(u.line_id),
                "delta_y": [complex(u.delta_y).real, complex(u.delta_y).imag],
                "delta_i": float(u.delta_i),
                "cost": float(u.cost),
            }
            for u in net.upgrades
        ],
        "selection": [
            {"coeffs": [float(c) for c in row], "rhs": float(rhs)}
            for row, rhs in zip(net.selection_A, net.selection_b)
        ],
        "scenarios": [
            {
                "id": int(s.id),
                "slack": {"bus": int(s.slack_bus), "v": float(s.slack_voltage)},
                "s_bounds": [
                    {
                        "p_min": _bound_out(complex(s.s_min[j]).real),
                        "p_max": _bound_out(complex(s.s_max[j]).real),
                        "q_min": _bound_out(complex(s.s_min[j]).imag),
                        "q_max": _bound_out(complex(s.s_max[j]).imag),
                    }
                    for j in range(len(s.s_min))
                ],
            }
            for s in net.scenarios
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


# -- problem documents --------------------------------------------------------

def serialize_problem(problem: Problem) -> str:
    """Canonical text form of a built problem.

    Constraint, triplet and sparse-pair orders are preserved exactly as
    stored, so a parsed copy evaluates bit-equal to the original and
    re-serialization reproduces the same bytes.
    """
    layout = problem.layout
    doc = {
        "version": FORMAT_VERSION,
        "layout": {
            "n_bus": layout.n_bus,
            "n_line": layout.n_line,
            "n_scen": layout.n_scen,
            "n_upg": layout.n_upg,
        },
        "big_m": float(problem.big_m),
        "objective": [float(c) for c in problem.objective_c],
        "selection": [
            {
                "coeffs": [float(c) for c in row],
                "rhs": float(rhs),
                "label": label,
            }
            for row, rhs, label in zip(
                problem.selection_A, problem.selection_b, problem.selection_labels
            )
        ],
        "constraints": [
            {
                "kind": c.kind,
                "scenario": None if c.scenario is None else int(c.scenario),
                "provenance": [
                    int(c.provenance[0]),
                    c.provenance[1] if isinstance(c.provenance[1], str) else int(c.provenance[1]),
                ],
                "alpha": _bound_out(c.alpha),
                "beta": _bound_out(c.beta),
                "Q": [[int(r), int(col), float(v)] for r, col, v in c.Q.triplets],
                "q": [[int(i), float(v)] for i, v in c.q],
                "m": [[int(i), float(v)] for i, v in c.m],
            }
            for c in problem.constraints
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


def parse_problem(text: str, strict: bool = True) -> Problem:
    """Inverse of :func:`serialize_problem`, with full index validation."""
    doc = _load_json(text, "problem document")
    _check_keys(
        doc,
        ("version", "layout", "big_m", "objective", "selection", "constraints"),
        "problem document",
        strict,
    )
    _check_version(doc, "problem document")

    _check_keys(doc["layout"], ("n_bus", "n_line", "n_scen", "n_upg"), "layout", strict)
    layout = VariableLayout(
        n_bus=_integer(doc["layout"]["n_bus"], "layout.n_bus"),
        n_line=_integer(doc["layout"]["n_line"], "layout.n_line"),
        n_scen=_integer(doc["layout"]["n_scen"], "layout.n_scen"),
        n_upg=_integer(doc["layout"]["n_upg"], "layout.n_upg"),
    )

    objective = np.array([_number(v, "objective") for v in doc["objective"]], dtype=float)
    if objective.shape != (layout.n_upg,):
        raise DocumentError(
            f"objective: {objective.size} coefficients for {layout.n_upg} upgrade options"
        )

    rows = []
    rhs = []
    labels = []
    for i, item in enumerate(doc["selection"]):
        ctx = f"selection[{i}]"
        _check_keys(item, ("coeffs", "rhs", "label"), ctx, strict)
        row = [_number(v, ctx) for v in item["coeffs"]]
        if len(row) != layout.n_upg:
            raise DocumentError(f"{ctx}: {len(row)} coefficients for {layout.n_upg} options")
        rows.append(row)
        rhs.append(_number(item["rhs"], ctx))
        labels.append(str(item["label"]))

    constraints = []
    for i, item in enumerate(doc["constraints"]):
        ctx = f"constraints[{i}]"
        _check_keys(
            item,
            ("kind", "scenario", "provenance", "alpha", "beta", "Q", "q", "m"),
            ctx,
            strict,
        )
        scenario = item["scenario"]
        if scenario is not None:
            scenario = _integer(scenario, ctx)
        prov = item["provenance"]
        if not (isinstance(prov, list) and len(prov) == 2):
            raise DocumentError(f"{ctx}: provenance must be [entity, tag]")
        alpha = _bound(item["alpha"], f"{ctx}.alpha", -1.0)
        beta = _bound(item["beta"], f"{ctx}.beta", 1.0)
        if alpha > beta:
            raise DocumentError(f"{ctx}: crossed bounds (alpha {alpha} > beta {beta})")
        triplets = []
        for t in item["Q"]:
            if not (isinstance(t, list) and len(t) == 3):
                raise DocumentError(f"{ctx}: malformed Q triplet {t!r}")
            r, col = _integer(t[0], ctx), _integer(t[1], ctx)
            if not (0 <= r <= col < 2 * layout.n_bus):
                raise DocumentError(f"{ctx}: Q triplet position ({r}, {col}) out of range")
            triplets.append((r, col, _number(t[2], ctx)))
        q_pairs = []
        for pair in item["q"]:
            if not (isinstance(pair, list) and len(pair) == 2):
                raise DocumentError(f"{ctx}: malformed q pair {pair!r}")
            idx = _integer(pair[0], ctx)
            if not (0 <= idx < 4 * layout.n_line):
                raise DocumentError(f"{ctx}: y index {idx} out of range")
            q_pairs.append((idx, _number(pair[1], ctx)))
        m_pairs = []
        for pair in item["m"]:
            if not (isinstance(pair, list) and len(pair) == 2):
                raise DocumentError(f"{ctx}: malformed m pair {pair!r}")
            idx = _integer(pair[0], ctx)
            if not (0 <= idx < layout.n_upg):
                raise DocumentError(f"{ctx}: a index {idx} out of range")
            m_pairs.append((idx, _number(pair[1], ctx)))
        try:
            constraints.append(
                QuadConstraint(
                    kind=str(item["kind"]),
                    scenario=scenario,
                    Q=SparseSymMatrix(dim=2 * layout.n_bus, triplets=tuple(triplets)),
                    q=tuple(q_pairs),
                    m=tuple(m_pairs),
                    alpha=alpha,
                    beta=beta,
                    provenance=(prov[0], prov[1]),
                )
            )
        except ValueError as exc:
            raise DocumentError(f"{ctx}: {exc}") from exc

    try:
        return Problem(
            layout=layout,
            constraints=tuple(constraints),
            selection_A=np.array(rows, dtype=float).reshape(len(rows), layout.n_upg),
            selection_b=np.array(rhs, dtype=float),
            selection_labels=tuple(labels),
            objective_c=objective,
            big_m=_number(doc["big_m"], "big_m"),
        )
    except ValueError as exc:
        raise DocumentError(f"problem document: {exc}") from exc


# -- point documents ----------------------------------------------------------

def serialize_point(point: Point) -> str:
    """Canonical text form of a candidate point (certificate)."""
    doc = {
        "version": FORMAT_VERSION,
        "a": [int(v) for v in point.a],
        "scenarios": [
            {
                "id": k,
                "z": [float(v) for v in point.z[k]],
                "y": [float(v) for v in point.y[k]],
            }
            for k in range(len(point.z))
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


def parse_point(text: str, layout: VariableLayout, strict: bool = True) -> Point:
    """Parse a point document and check it against a problem's layout."""
    doc = _load_json(text, "point document")
    _check_keys(doc, ("version", "a", "scenarios"), "point document", strict)
    _check_version(doc, "point document")

    a = np.array([_integer(v, "a") for v in doc["a"]], dtype=int)
    if a.shape != (layout.n_upg,):
        raise DocumentError(f"a: length {a.size}, layout expects {layout.n_upg}")
    if not np.all((a == 0) | (a == 1)):
        raise DocumentError(f"a: entries must be 0 or 1, got {a.tolist()}")

    scen_items = _dense_ids(
        [dict(item, id=_integer(item.get("id"), "scenarios")) for item in doc["scenarios"]],
        "scenarios",
    )
    if len(scen_items) != layout.n_scen:
        raise DocumentError(
            f"scenarios: {len(scen_items)} blocks, layout expects {layout.n_scen}"
        )
    z_blocks = []
    y_blocks = []
    for item in scen_items:
        ctx = f"scenarios[{item['id']}]"
        _check_keys(item, ("id", "z", "y"), ctx, strict)
        z = np.array([_number(v, ctx) for v in item["z"]], dtype=float)
        y = np.array([_number(v, ctx) for v in item["y"]], dtype=float)
        if z.shape != (layout.z_size,):
            raise DocumentError(f"{ctx}: z length {z.size}, expected {layout.z_size}")
        if y.shape != (layout.y_size,):
            raise DocumentError(f"{ctx}: y length {y.size}, expected {layout.y_size}")
        z_blocks.append(z)
        y_blocks.append(y)
    return Point(a=a, z=tuple(z_blocks), y=tuple(y_blocks))
