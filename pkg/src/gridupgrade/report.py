"""Report rendering: tab-delimited records plus matplotlib figures.

The CLI's report paths write a TSV file with one record per constraint
(and per selection row) and render companion figures into the same
directory: violation summary by constraint family, voltage profile
against its box, and line loading against limits.  Figures are rendered with the
Agg backend so the toolkit stays headless.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .network import Network
from .powerflow import PFResult
from .qcqp import EvalReport, Problem

FAMILY_ORDER = (
    "voltage",
    "current",
    "line_power_real",
    "line_power_reactive",
    "balance_real",
    "balance_reactive",
)


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def eval_tsv_text(report: EvalReport) -> str:
    """One record per constraint, then one per selection row."""
    lines = ["record\tindex\tkind\tscenario\tentity\ttag\tvalue\talpha\tbeta\tviolation\tsatisfied"]
    for rec in report.records:
        lines.append(
            "\t".join(
                [
                    "constraint",
                    str(rec.index),
                    rec.kind,
                    "" if rec.scenario is None else str(rec.scenario),
                    str(rec.provenance[0]),
                    str(rec.provenance[1]),
                    _fmt(rec.value),
                    _fmt(rec.alpha),
                    _fmt(rec.beta),
                    _fmt(rec.violation),
                    str(rec.satisfied).lower(),
                ]
            )
        )
    for rec in report.selection_records:
        lines.append(
            "\t".join(
                [
                    "selection",
                    str(rec.index),
                    rec.label,
                    "",
                    "",
                    "",
                    _fmt(rec.value),
                    "-inf",
                    _fmt(rec.bound),
                    _fmt(rec.violation),
                    str(rec.satisfied).lower(),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_eval_tsv(report: EvalReport, path: Path) -> None:
    path.write_text(eval_tsv_text(report))


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_eval_figures(report: EvalReport, problem: Problem, outdir: Path) -> list[Path]:
    """Violation-by-family chart and per-scenario voltage profiles."""
    plt = _pyplot()
    written = []

    worst = {family: 0.0 for family in FAMILY_ORDER}
    for rec in report.records:
        worst[rec.kind] = max(worst[rec.kind], rec.violation)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    families = list(FAMILY_ORDER)
    values = [worst[f] for f in families]
    ax.bar(range(len(families)), values, color="#54678f")
    ax.axhline(report.tol, color="#b03030", linestyle="--", linewidth=1, label=f"tol = {report.tol:g}")
    ax.set_xticks(range(len(families)))
    ax.set_xticklabels(families, rotation=20, ha="right", fontsize=8)
    ax.set_yscale("symlog", linthresh=max(report.tol, 1e-12))
    ax.set_ylabel("worst violation")
    ax.set_title("constraint violations by family")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "violations_by_family.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    # Voltage rows carry the squared box; recover |v| per bus and scenario.
    n_bus = problem.layout.n_bus
    fig, ax = plt.subplots(figsize=(7, 3.5))
    box_drawn = False
    for rec in report.records:
        if rec.kind != "voltage":
            continue
        bus = rec.provenance[0]
        mag = math.sqrt(max(rec.value, 0.0))
        ax.plot(bus, mag, "o", color="#2a6f4e",
                label="|v|" if not box_drawn else None)
        lo, hi = math.sqrt(max(rec.alpha, 0.0)), math.sqrt(max(rec.beta, 0.0))
        ax.vlines(bus, lo, hi, color="#bbbbbb", linewidth=6, alpha=0.5, zorder=0,
                  label="voltage box" if not box_drawn else None)
        box_drawn = True
    ax.set_xticks(range(n_bus))
    ax.set_xlabel("bus")
    ax.set_ylabel("voltage magnitude [pu]")
    ax.set_title("voltage profile vs. bounds (all scenarios)")
    if box_drawn:
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "voltage_profile.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written


def write_eval_report(
    report: EvalReport, problem: Problem, outdir: str | Path
) -> list[Path]:
    """Full report bundle: records TSV plus figures, into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tsv = outdir / "evaluation.tsv"
    write_eval_tsv(report, tsv)
    return [tsv] + render_eval_figures(report, problem, outdir)


def write_flow_tsv(
    net: Network,
    result: PFResult,
    flows: np.ndarray,
    currents: np.ndarray,
    i_max: np.ndarray,
    path: Path,
) -> None:
    lines = ["record\tid\tbus_or_pair\tvalue_re\tvalue_im\tmagnitude\tlimit"]
    for bus in net.buses:
        v = result.v[bus.id]
        lines.append(
            f"bus\t{bus.id}\t{bus.id}\t{_fmt(v.real)}\t{_fmt(v.imag)}\t{_fmt(abs(v))}\t"
        )
    for line in net.lines:
        for end, into in ((0, line.from_bus), (1, line.to_bus)):
            s = flows[line.id, end]
            lines.append(
                f"flow\t{line.id}\tinto {into}\t{_fmt(s.real)}\t{_fmt(s.imag)}\t{_fmt(abs(s))}\t"
            )
    for line in net.lines:
        lines.append(
            f"current\t{line.id}\t({line.from_bus},{line.to_bus})\t\t\t"
            f"{_fmt(currents[line.id])}\t{_fmt(i_max[line.id])}"
        )
    path.write_text("\n".join(lines) + "\n")


def render_flow_figures(
    net: Network,
    result: PFResult,
    currents: np.ndarray,
    i_max: np.ndarray,
    outdir: Path,
) -> list[Path]:
    """Voltage profile and line-loading figures for one power-flow solution."""
    plt = _pyplot()
    written = []

    fig, ax = plt.subplots(figsize=(7, 3.5))
    mags = [abs(result.v[b.id]) for b in net.buses]
    for bus in net.buses:
        ax.vlines(bus.id, bus.v_min, bus.v_max, color="#bbbbbb", linewidth=6, alpha=0.5, zorder=0)
    ax.plot(range(net.n_bus), mags, "o-", color="#2a6f4e")
    ax.set_xticks(range(net.n_bus))
    ax.set_xlabel("bus")
    ax.set_ylabel("voltage magnitude [pu]")
    ax.set_title("voltage profile")
    fig.tight_layout()
    path = outdir / "voltage_profile.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    if net.n_line:
        fig, ax = plt.subplots(figsize=(7, 3.5))
        loading = [
            currents[line.id] / i_max[line.id] if i_max[line.id] > 0 else 0.0
            for line in net.lines
        ]
        colors = ["#b03030" if x > 1.0 else "#54678f" for x in loading]
        ax.bar(range(net.n_line), loading, color=colors)
        ax.axhline(1.0, color="#b03030", linestyle="--", linewidth=1)
        ax.set_xticks(range(net.n_line))
        ax.set_xlabel("line")
        ax.set_ylabel("current / limit")
        ax.set_title("line loading")
        fig.tight_layout()
        path = outdir / "line_loading.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def write_flow_report(
    net: Network,
    result: PFResult,
    flows: np.ndarray,
    currents: np.ndarray,
    i_max: np.ndarray,
    outdir: str | Path,
) -> list[Path]:
    """Full power-flow report bundle: TSV plus figures, into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tsv = outdir / "flow.tsv"
    write_flow_tsv(net, result, flows, currents, i_max, tsv)
    return [tsv] + render_flow_figures(net, result, currents, i_max, outdir)
