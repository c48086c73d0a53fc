"""AC power-flow oracle in rectangular coordinates.

Solves ``diag(v) * conj(Y v) = s`` for the complex bus voltages by
Newton-Raphson on the real/imaginary mismatch of every non-slack bus,
holding the slack bus at a fixed real voltage.  Rectangular coordinates
keep the whole toolkit in one coordinate system and make the Jacobian a
polynomial in the unknowns.

The oracle requires fixed injections at non-slack buses; it certifies
feasibility (a converged profile is a root by the independent residual
check) but never proves infeasibility: Newton from a flat start can miss
solutions of the quadratic flow equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PFConfig:
    """Newton iteration controls; the start is always flat."""

    tol: float = 1e-10
    max_iter: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class PFResult:
    """Converged (or abandoned) voltage profile with mismatch diagnostics."""

    v: np.ndarray
    iterations: int
    mismatch_norm: float
    converged: bool
    slack_injection: complex
    message: str = ""


def bus_injections(y_matrix: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Complex power injected at every bus: ``diag(v) * conj(Y v)``."""
    return v * np.conj(y_matrix @ v)


def solve_newton(
    y_matrix: np.ndarray,
    injections: np.ndarray,
    slack: tuple[int, float],
    cfg: PFConfig = PFConfig(),
) -> PFResult:
    """Newton-Raphson power flow with one slack bus.

    ``injections`` is a full-length complex vector; the slack entry is
    ignored (that bus absorbs the system imbalance).  The residual for each
    non-slack bus j is the complex mismatch ``(diag(v) conj(Y v))_j - s_j``
    split into real and imaginary equations; convergence is measured in the
    max norm.  A profile that is exact at the flat start reports zero
    iterations.
    """
    n = y_matrix.shape[0]
    slack_bus, slack_v = slack
    if not slack_v > 0:
        raise ValueError(f"slack voltage magnitude must be positive, got {slack_v}")
    injections = np.asarray(injections, dtype=complex)
    if injections.shape != (n,):
        raise ValueError(f"expected {n} injections, got shape {injections.shape}")

    free = np.array([j for j in range(n) if j != slack_bus], dtype=int)
    g, b = y_matrix.real, y_matrix.imag
    v = np.full(n, complex(slack_v, 0.0))

    def mismatch(voltages: np.ndarray) -> np.ndarray:
        mis = bus_injections(y_matrix, voltages) - injections
        return np.concatenate([mis[free].real, mis[free].imag])

    message = ""
    converged = False
    iterations = 0
    resid = mismatch(v)
    norm = float(np.max(np.abs(resid))) if resid.size else 0.0

    for it in range(cfg.max_iter + 1):
        if not np.isfinite(norm):
            message = "iteration diverged to non-finite values"
            break
        if norm <= cfg.tol:
            converged = True
            iterations = it
            break
        if it == cfg.max_iter:
            iterations = it
            message = f"iteration cap {cfg.max_iter} reached with mismatch {norm:.3e}"
            break

        e, f = v.real, v.imag
        current = y_matrix @ v
        c, d = current.real, current.imag
        # P_j = e_j c_j + f_j d_j, Q_j = f_j c_j - e_j d_j with c + id = Yv.
        j_pe = e[:, None] * g + f[:, None] * b + np.diag(c)
        j_pf = -e[:, None] * b + f[:, None] * g + np.diag(d)
        j_qe = f[:, None] * g - e[:, None] * b - np.diag(d)
        j_qf = -f[:, None] * b - e[:, None] * g + np.diag(c)
        jac = np.block([
            [j_pe[np.ix_(free, free)], j_pf[np.ix_(free, free)]],
            [j_qe[np.ix_(free, free)], j_qf[np.ix_(free, free)]],
        ])
        try:
            step = np.linalg.solve(jac, resid)
        except np.linalg.LinAlgError:
            iterations = it
            message = "singular Jacobian"
            break
        if not np.all(np.isfinite(step)):
            iterations = it
            message = "Newton step is non-finite"
            break

        nf = len(free)
        e_new = e.copy()
        f_new = f.copy()
        e_new[free] -= step[:nf]
        f_new[free] -= step[nf:]
        v = e_new + 1j * f_new
        resid = mismatch(v)
        norm = float(np.max(np.abs(resid))) if resid.size else 0.0
        iterations = it + 1

    slack_injection = complex(bus_injections(y_matrix, v)[slack_bus])
    return PFResult(
        v=v,
        iterations=iterations,
        mismatch_norm=norm,
        converged=converged,
        slack_injection=slack_injection,
        message=message,
    )


def directed_flow(v_into: complex, v_other: complex, y_offdiag: complex) -> complex:
    """Power flowing into a bus out of one line, from the off-diagonal entry."""
    return v_into * np.conj(y_offdiag * (v_other - v_into))


def branch_flows(
    y_matrix: np.ndarray,
    v: np.ndarray,
    pairs: list[tuple[int, int]] | None = None,
) -> np.ndarray:
    """Directed complex power flows for both ends of every line.

    Returns an array of shape ``(len(pairs), 2)``: column 0 is the flow into
    the pair's first bus, column 1 into the second.  When ``pairs`` is not
    given, the nonzero upper-triangle entries of ``y_matrix`` define the
    lines.  For zero-row-sum matrices the flows into a bus sum to its
    injection ``(diag(v) conj(Y v))_j``; the two directions of one line
    differ by the line's losses.
    """
    if pairs is None:
        n = y_matrix.shape[0]
        pairs = [
            (j, l)
            for j in range(n)
            for l in range(j + 1, n)
            if y_matrix[j, l] != 0
        ]
    flows = np.zeros((len(pairs), 2), dtype=complex)
    for idx, (j, l) in enumerate(pairs):
        y_jl = y_matrix[j, l]
        flows[idx, 0] = directed_flow(v[j], v[l], y_jl)
        flows[idx, 1] = directed_flow(v[l], v[j], y_jl)
    return flows
