"""Certified critical visibilities for joint measurability and for local
hidden-state models, plus a closed form for unbiased qubit pairs.

Both programs maximize the visibility v at which the depolarized target
(measurement set or assemblage) still admits the classical parent structure,
capped at 1. A verdict is only issued when the solver converged; the
compatibility side additionally requires the optimum to clear 1 by the
verdict margin.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from .linalg import HermitianOperator
from .quantum import Assemblage, MeasurementSet, bloch_from_povm
from .sdp import STATUS_OPTIMAL, ProgramBuilder
from .tolerances import (
    DEFAULT_FEAS_TOL,
    DEFAULT_GAP_TOL,
    VERDICT_MARGIN_FACTOR,
)

KIND_JOINT_MEASURABILITY = "JointMeasurability"
KIND_LOCAL_HIDDEN_STATE = "LocalHiddenState"

MAX_SETTINGS = 8


@dataclass(frozen=True)
class CertificationReport:
    kind: str
    critical_visibility: float
    verdict: str
    status: str
    solver_gap: float

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "CertificationReport":
        return cls(
            kind=str(data["kind"]),
            critical_visibility=float(data["critical_visibility"]),
            verdict=str(data["verdict"]),
            status=str(data["status"]),
            solver_gap=float(data["solver_gap"]),
        )


def _verdict(status: str, crit: float, gap_tol: float, yes: str, no: str) -> str:
    if status != STATUS_OPTIMAL:
        return "Inconclusive"
    if crit >= 1.0 - VERDICT_MARGIN_FACTOR * gap_tol:
        return yes
    return no


def jm_critical_visibility(
    mset: MeasurementSet,
    gap_tol: float = DEFAULT_GAP_TOL,
    feas_tol: float = DEFAULT_FEAS_TOL,
) -> CertificationReport:
    """Largest v at which the depolarized set v B + (1 - v) I/2 has a joint
    parent measurement, capped at 1.

    The parent is indexed by one bit per setting; only the outcome-0
    marginal rows are imposed, the complementary rows follow from the
    completeness of the parent. Verdict Compatible means the set itself
    (v = 1) is jointly measurable within the verdict margin.
    """
    if mset.dim != 2 or any(len(p) != 2 for p in mset.settings):
        raise ValueError("expected two-outcome qubit measurements")
    n = mset.n
    if n > MAX_SETTINGS:
        raise ValueError(f"parent search is exponential in n; refusing n > {MAX_SETTINGS}")
    lams = list(itertools.product((0, 1), repeat=n))
    n_l = len(lams)
    v_ix, s_ix = n_l, n_l + 1
    builder = ProgramBuilder([2] * n_l + [1, 1])
    ident = HermitianOperator(np.eye(2))
    half = 0.5 * np.eye(2, dtype=np.complex128)
    builder.add_operator_equation(
        {li: 1.0 for li in range(n_l)}, ident
    )
    for x in range(n):
        terms: dict = {
            li: 1.0 for li, lam in enumerate(lams) if lam[x] == 0
        }
        terms[v_ix] = -(mset[x][0].entries - half)
        builder.add_operator_equation(terms, HermitianOperator(half))
    builder.add_operator_equation({v_ix: 1.0, s_ix: 1.0}, 1.0)
    objective = [None] * n_l + [HermitianOperator([[1.0]]), None]
    sol = builder.prepared().solve_with(
        objective, maximize=True, gap_tol=gap_tol, feas_tol=feas_tol
    )
    crit = min(1.0, max(0.0, sol.primal_value))
    return CertificationReport(
        kind=KIND_JOINT_MEASURABILITY,
        critical_visibility=crit,
        verdict=_verdict(sol.status, crit, gap_tol, "Compatible", "Incompatible"),
        status=sol.status,
        solver_gap=sol.gap,
    )


def lhs_critical_visibility(
    assemblage: Assemblage,
    gap_tol: float = DEFAULT_GAP_TOL,
    feas_tol: float = DEFAULT_FEAS_TOL,
) -> CertificationReport:
    """Largest v at which the assemblage mixed toward its trace-weighted
    maximally mixed version admits a local hidden-state decomposition,
    capped at 1.

    Hidden states are indexed by one response bit per setting; the
    outcome-0 rows plus the global sum pin the decomposition.
    """
    if assemblage.dim != 2 or assemblage.n_outcomes != 2:
        raise ValueError("expected a two-outcome qubit assemblage")
    n = assemblage.n_settings
    if n > MAX_SETTINGS:
        raise ValueError(f"model search is exponential in n; refusing n > {MAX_SETTINGS}")
    lams = list(itertools.product((0, 1), repeat=n))
    n_l = len(lams)
    v_ix, s_ix = n_l, n_l + 1
    builder = ProgramBuilder([2] * n_l + [1, 1])
    half = 0.5 * np.eye(2, dtype=np.complex128)
    rho_b = assemblage.reduced_state.entries
    global_terms: dict = {li: 1.0 for li in range(n_l)}
    global_terms[v_ix] = -(rho_b - half)
    builder.add_operator_equation(global_terms, HermitianOperator(half))
    for x in range(n):
        sigma = assemblage[0, x].entries
        t_x = float(np.trace(sigma).real)
        terms = {li: 1.0 for li, lam in enumerate(lams) if lam[x] == 0}
        terms[v_ix] = -(sigma - t_x * half)
        builder.add_operator_equation(terms, HermitianOperator(t_x * half))
    builder.add_operator_equation({v_ix: 1.0, s_ix: 1.0}, 1.0)
    objective = [None] * n_l + [HermitianOperator([[1.0]]), None]
    sol = builder.prepared().solve_with(
        objective, maximize=True, gap_tol=gap_tol, feas_tol=feas_tol
    )
    crit = min(1.0, max(0.0, sol.primal_value))
    return CertificationReport(
        kind=KIND_LOCAL_HIDDEN_STATE,
        critical_visibility=crit,
        verdict=_verdict(sol.status, crit, gap_tol, "Unsteerable", "Steerable"),
        status=sol.status,
        solver_gap=sol.gap,
    )


def pair_jm_oracle(mset: MeasurementSet) -> float:
    """Closed-form critical visibility for two unbiased qubit measurements.

    With weighted axes g_y (sharpness times axis), the pair is jointly
    measurable up to v = 2 / (|g_1 + g_2| + |g_1 - g_2|), capped at 1.
    Refuses biased effects, for which this expression does not apply.
    """
    if mset.n != 2:
        raise ValueError("oracle applies to exactly two measurements")
    params = bloch_from_povm(mset)
    for alpha in params.bias:
        if abs(alpha - 1.0) > 1e-9:
            raise ValueError("oracle requires unbiased measurements")
    g1 = params.sharpness[0] * np.asarray(params.axes[0])
    g2 = params.sharpness[1] * np.asarray(params.axes[1])
    denom = float(np.linalg.norm(g1 + g2) + np.linalg.norm(g1 - g2))
    if denom < 1e-15:
        return 1.0
    return min(1.0, 2.0 / denom)
