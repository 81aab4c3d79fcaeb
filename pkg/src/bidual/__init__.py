"""Lagrangian-bidual LP relaxations of sparsity minimization and lower-bound certificates."""
from .certify import VerificationReport, lower_bound, oracle_for, verify_certificate
from .model import (
    CONSERVATIVE,
    BlockPartition,
    DualSolution,
    OracleResult,
    ProblemInstance,
    RelaxationSolution,
    SparsityCertificate,
    SparsityMode,
    Status,
    primal_objective,
    validate,
)
from .oracle import OracleBudget, oracle_entry, oracle_group, oracle_mixed, weighted_oracle
from .relax import build_bidual_lp, build_dual_lp, recover_solution, solve_bidual, solve_dual
from .simplex import LinearProgram, LpSolution, SolverOptions, solve_lp

__version__ = "0.1.0"
