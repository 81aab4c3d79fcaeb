"""Per-instance lower bounds on the sparsity objective, and their checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import (
    BidualError,
    OracleResult,
    ProblemInstance,
    SparsityCertificate,
    SparsityMode,
    Status,
    check,
)
from .oracle import OracleBudget, oracle_entry, oracle_group, oracle_mixed, weighted_oracle
from .relax import solve_bidual
from .simplex import SolverOptions

VALIDITY_TOL = 1e-9


class InfeasibleRelaxation(BidualError):
    """The box bidual is infeasible, hence so is the box-constrained primal."""


class HypothesisViolated(BidualError):
    pass


@dataclass(frozen=True)
class VerificationReport:
    valid: bool
    gap: float
    bound: float
    oracle_value: float
    hypothesis_satisfied: bool
    witness_inf_norm: float

    @property
    def ok(self) -> bool:
        """False only for a bound that exceeds the truth while the hypothesis holds."""
        return self.valid or not self.hypothesis_satisfied

    def summary(self) -> str:
        lines = [
            f"bound            {self.bound:.12g}",
            f"oracle value     {self.oracle_value:.12g}",
            f"gap              {self.gap:.12g}",
            f"hypothesis       {'satisfied' if self.hypothesis_satisfied else 'VIOLATED (bound not guaranteed)'}",
            f"valid            {'yes' if self.valid else 'NO'}",
        ]
        return "\n".join(lines)


def _integral_weights(instance: ProblemInstance) -> bool:
    w = np.concatenate([instance.alpha, instance.beta])
    return bool(np.all(w == np.round(w)))


def lower_bound(instance: ProblemInstance, opts: Optional[SolverOptions] = None) -> SparsityCertificate:
    """Certificate from the box bidual: the LP optimum bounds the primal optimum from below.

    The bound holds for the box-constrained primal unconditionally, and for
    the unconstrained primal whenever ``M`` dominates the optimal solution.
    With integer weights the objective is integral, so the ceiling of the
    bound is reported as ``integer_bound``.
    """
    check(instance)
    if instance.conservative:
        raise ValueError("a certificate needs a finite box bound M")
    sol = solve_bidual(instance, opts)
    if sol.status is Status.INFEASIBLE:
        raise InfeasibleRelaxation(
            f"no x with A x = b and |x| <= {instance.M:.12g}; the primal is infeasible too"
        )
    if sol.status is not Status.OPTIMAL:
        raise BidualError(f"unexpected relaxation status {sol.status.value}")
    bound = max(0.0, sol.objective)
    integer_bound = math.ceil(bound - VALIDITY_TOL) if _integral_weights(instance) else None
    return SparsityCertificate(
        bound=bound,
        kind=instance.mode,
        M_used=float(instance.M),
        relaxation_objective=sol.objective,
        integer_bound=integer_bound,
        x_relaxed=sol.x,
    )


def verify_certificate(
    cert: SparsityCertificate, oracle_result: OracleResult, strict: bool = False
) -> VerificationReport:
    """Compare a certificate against an exact oracle value.

    A hypothesis violation (``M_used`` below the witness's largest entry)
    is reported, not raised, unless ``strict``.
    """
    if not oracle_result.exhaustive:
        raise ValueError("verification needs an exhaustive oracle result")
    w = oracle_result.witness_x
    w_norm = float(np.max(np.abs(w), initial=0.0)) if w is not None else math.inf
    hypothesis = cert.M_used >= w_norm * (1 - 1e-12)
    if strict and not hypothesis:
        raise HypothesisViolated(f"M_used = {cert.M_used:.12g} < ||witness||_inf = {w_norm:.12g}")
    value = oracle_result.value
    return VerificationReport(
        valid=cert.bound <= value + VALIDITY_TOL,
        gap=value - cert.bound,
        bound=cert.bound,
        oracle_value=value,
        hypothesis_satisfied=hypothesis,
        witness_inf_norm=w_norm,
    )


def oracle_for(instance: ProblemInstance, budget=None) -> OracleResult:
    """Run the oracle matching the instance's preset (weighted oracle otherwise)."""
    budget = budget or OracleBudget()
    mode = instance.mode
    if mode is None:
        return weighted_oracle(instance, budget)
    if mode.name == SparsityMode.ENTRY:
        return oracle_entry(instance, budget)
    if mode.name == SparsityMode.GROUP:
        return oracle_group(instance, budget)
    return oracle_mixed(instance, mode.gamma, budget)
