"""Shared fixtures: worked instances and random instance generators."""

from __future__ import annotations

import numpy as np
import pytest

from gridupgrade import (
    Bus,
    Line,
    Network,
    Scenario,
    UpgradeOption,
    apply_upgrades,
    branch_flows,
)


def two_bus_upgrade_net() -> Network:
    """The worked two-bus instance: the base current limit is violated at the
    pinned load and the single (costly) upgrade restores feasibility."""
    return Network(
        buses=(Bus(0, 0.9, 1.1), Bus(1, 0.9, 1.1)),
        lines=(Line(0, 0, 1, 1 - 3j, 0.05),),
        upgrades=(UpgradeOption(0, 0, 1 - 3j, 0.10, 1.0),),
        scenarios=(
            Scenario(
                0,
                s_min=(complex(-10, -10), complex(-0.1, 0)),
                s_max=(complex(10, 10), complex(-0.1, 0)),
                slack_bus=0,
                slack_voltage=1.0,
            ),
        ),
    )


def two_bus_relaxed_net() -> Network:
    """Two-bus instance whose base network satisfies everything."""
    return Network(
        buses=(Bus(0, 0.9, 1.1), Bus(1, 0.9, 1.1)),
        lines=(Line(0, 0, 1, 1 - 3j, 0.5),),
        upgrades=(UpgradeOption(0, 0, 1 - 3j, 0.10, 1.0),),
        scenarios=(
            Scenario(
                0,
                s_min=(complex(-10, -10), complex(-0.05, 0)),
                s_max=(complex(10, 10), complex(-0.05, 0)),
                slack_bus=0,
                slack_voltage=1.0,
            ),
        ),
    )


def zero_load_net() -> Network:
    """Scenario boxes contain zero injections everywhere, so the flat
    zero-flow point is feasible."""
    return Network(
        buses=(Bus(0, 0.9, 1.1), Bus(1, 0.9, 1.1)),
        lines=(Line(0, 0, 1, 1 - 3j, 0.5),),
        upgrades=(),
        scenarios=(
            Scenario(
                0,
                s_min=(complex(-1, -1), complex(-1, -1)),
                s_max=(complex(1, 1), complex(1, 1)),
                slack_bus=0,
                slack_voltage=1.0,
            ),
        ),
    )


@pytest.fixture
def worked_net() -> Network:
    return two_bus_upgrade_net()


@pytest.fixture
def relaxed_net() -> Network:
    return two_bus_relaxed_net()


def random_topology(rng: np.random.Generator, n_bus: int) -> list[tuple[int, int]]:
    """Random connected simple graph: a spanning tree plus a few chords."""
    pairs = set()
    order = [int(v) for v in rng.permutation(n_bus)]
    for i in range(1, n_bus):
        j = order[i]
        l = order[int(rng.integers(0, i))]
        pairs.add((min(j, l), max(j, l)))
    extra = int(rng.integers(0, max(1, n_bus - 1)))
    for _ in range(extra):
        j, l = (int(v) for v in rng.choice(n_bus, size=2, replace=False))
        pairs.add((min(j, l), max(j, l)))
    return sorted(pairs)


def random_branch_admittance(rng: np.random.Generator) -> complex:
    return complex(rng.uniform(0.3, 3.0), -rng.uniform(0.5, 6.0))


def random_network(
    rng: np.random.Generator,
    n_bus: int | None = None,
    max_upgrades_per_line: int = 2,
    n_scen: int = 1,
    aligned_upgrades: bool = False,
) -> Network:
    """Structurally valid random instance (no feasibility guarantee).

    With ``aligned_upgrades`` each admittance increment is a positive real
    multiple of its line's base admittance, which keeps all configurations
    of a line collinear in the complex plane.
    """
    if n_bus is None:
        n_bus = int(rng.integers(2, 7))
    buses = tuple(Bus(j, 0.9, 1.1) for j in range(n_bus))
    lines = []
    for e, (j, l) in enumerate(random_topology(rng, n_bus)):
        lines.append(Line(e, j, l, random_branch_admittance(rng), float(rng.uniform(0.2, 2.0))))
    upgrades = []
    for line in lines:
        for _ in range(int(rng.integers(0, max_upgrades_per_line + 1))):
            if aligned_upgrades:
                delta_y = float(rng.uniform(0.3, 2.0)) * line.y_branch
            else:
                delta_y = complex(rng.uniform(0.2, 2.0), rng.uniform(-3.0, 0.0))
            upgrades.append(
                UpgradeOption(
                    len(upgrades),
                    line.id,
                    delta_y,
                    float(rng.uniform(0.0, 0.5)),
                    float(rng.uniform(0.5, 5.0)),
                )
            )
    scenarios = []
    for k in range(n_scen):
        s_min = []
        s_max = []
        for j in range(n_bus):
            if j == 0:
                s_min.append(complex(-10, -10))
                s_max.append(complex(10, 10))
            else:
                p = -float(rng.uniform(0.01, 0.08))
                q = p * float(rng.uniform(0.0, 0.4))
                s_min.append(complex(p, q))
                s_max.append(complex(p, q))
        scenarios.append(Scenario(k, tuple(s_min), tuple(s_max), 0, 1.0))
    return Network(buses, tuple(lines), tuple(upgrades), tuple(scenarios))


def random_zero_rowsum_matrix(
    rng: np.random.Generator, n_bus: int
) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Random complex Laplacian from a random connected graph."""
    pairs = random_topology(rng, n_bus)
    y = np.zeros((n_bus, n_bus), dtype=complex)
    for j, l in pairs:
        yb = complex(rng.uniform(-3, 3), rng.uniform(-6, 6))
        if abs(yb) < 1e-3:
            yb = 1.0 - 1.0j
        y[j, l] -= yb
        y[l, j] -= yb
        y[j, j] += yb
        y[l, l] += yb
    return y, pairs


def random_point_inside_boxes(rng: np.random.Generator, net: Network) -> np.ndarray:
    """Rectangular voltages with every magnitude inside its bus box."""
    mags = np.array(
        [rng.uniform(bus.v_min, bus.v_max) for bus in net.buses]
    )
    angles = rng.uniform(-0.3, 0.3, size=net.n_bus)
    return mags * np.exp(1j * angles)


def flows_for_config(net: Network, a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """One scenario's y block, with every directed flow set to the complex
    expansion of the configuration selected by ``a``."""
    y_upg, _ = apply_upgrades(net, a)
    pairs = [(line.from_bus, line.to_bus) for line in net.lines]
    flows = branch_flows(y_upg, v, pairs)
    n_line = net.n_line
    y_vec = np.zeros(4 * n_line)
    for e in range(n_line):
        y_vec[2 * e] = flows[e, 0].real
        y_vec[2 * e + 1] = flows[e, 1].real
        y_vec[2 * n_line + 2 * e] = flows[e, 0].imag
        y_vec[2 * n_line + 2 * e + 1] = flows[e, 1].imag
    return y_vec


def chain_loads(rng: np.random.Generator, n_bus: int) -> list[complex]:
    loads = [0j]
    for _ in range(1, n_bus):
        p = -float(rng.uniform(0.02, 0.08))
        loads.append(complex(p, p * float(rng.uniform(0.0, 0.3))))
    return loads


def upgrade_required_instance(seed: int) -> Network:
    """Radial instance where exactly one line must be reinforced.

    The loaded chain makes each line carry its downstream loads, so the
    tightened line's base limit is certainly violated while the rescue
    option's raised limit certainly admits the flow.  A cheaper decoy
    option (no extra current headroom) is always present, so the solver
    must reject at least two cheaper candidates before the optimum.
    """
    rng = np.random.default_rng(1000 + seed)
    n_bus = int(rng.integers(2, 5))
    loads = chain_loads(rng, n_bus)
    downstream = [abs(sum(loads[e + 1 :], 0j)) for e in range(n_bus - 1)]
    tight = int(rng.integers(0, n_bus - 1))

    lines = []
    for e in range(n_bus - 1):
        y = random_branch_admittance(rng)
        est = downstream[e]
        i_max = 0.75 * est if e == tight else 2.5 * est
        lines.append(Line(e, e, e + 1, y, i_max))

    est = downstream[tight]
    rescue_cost = float(rng.uniform(1.2, 3.0))
    decoy_cost = float(rng.uniform(0.2, 0.9))
    upgrades = [
        UpgradeOption(0, tight, 0.5 * lines[tight].y_branch, 0.0, decoy_cost),
        UpgradeOption(1, tight, 1.0 * lines[tight].y_branch, 0.75 * est, rescue_cost),
    ]

    scenario = Scenario(
        0,
        s_min=tuple([complex(-10, -10)] + loads[1:]),
        s_max=tuple([complex(10, 10)] + loads[1:]),
        slack_bus=0,
        slack_voltage=1.0,
    )
    return Network(
        buses=tuple(Bus(j, 0.9, 1.1) for j in range(n_bus)),
        lines=tuple(lines),
        upgrades=tuple(upgrades),
        scenarios=(scenario,),
    )


def base_feasible_instance(seed: int) -> Network:
    """Instance with generous limits whose zero-cost plan is optimal."""
    rng = np.random.default_rng(2000 + seed)
    net = random_network(rng, max_upgrades_per_line=1, aligned_upgrades=True)
    lines = tuple(
        Line(l.id, l.from_bus, l.to_bus, l.y_branch, 2.0) for l in net.lines
    )
    return Network(net.buses, lines, net.upgrades, net.scenarios)


def solvable_instances() -> list[Network]:
    """Twenty deterministic instances, all with a certified optimum."""
    nets = [two_bus_upgrade_net(), two_bus_relaxed_net()]
    nets += [upgrade_required_instance(seed) for seed in range(9)]
    nets += [base_feasible_instance(seed) for seed in range(9)]
    return nets
