"""LP encodings of the bidual relaxation and of its dual.

The bidual of the weighted sparsity problem is the convex program::

    minimize    scale * sum_k [ alpha_k ||x_k||_inf + beta_k ||x_k||_1 ]
    subject to  A x = b,   ||x||_inf <= M   (box form)

with ``scale = 1/M`` in box form and ``scale = 1`` in conservative form.
It is encoded with ``x = x+ - x-`` and one epigraph column ``t_k`` per
block carrying group weight.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    BidualError,
    DualSolution,
    ProblemInstance,
    RelaxationSolution,
    Status,
    block_norms,
    check,
)
from .simplex import LinearProgram, LpSolution, SolverOptions, solve_lp


class ConservativeMNotSupported(BidualError, ValueError):
    pass


class NonOptimalStatus(BidualError):
    def __init__(self, status):
        self.status = status
        super().__init__(f"LP status is {status.value}, not optimal")


@dataclass(frozen=True)
class BidualEncoding:
    lp: LinearProgram
    n: int
    blocks_with_t: np.ndarray  # block index of every t column
    scale: float
    instance: ProblemInstance

    @property
    def xp(self) -> slice:
        return slice(0, self.n)

    @property
    def xm(self) -> slice:
        return slice(self.n, 2 * self.n)

    @property
    def t(self) -> slice:
        return slice(2 * self.n, 2 * self.n + len(self.blocks_with_t))


def build_bidual_lp(instance: ProblemInstance) -> BidualEncoding:
    """Encode the bidual relaxation of ``instance`` as a standard-form LP.

    Columns are ``[x+ (n), x- (n), t (one per block with alpha_k > 0),
    s (one slack per entry of those blocks)]``. Rows are ``A(x+ - x-) = b``
    followed by the epigraph rows ``x+_i + x-_i - t_k + s_i = 0``. The box
    ``|x_i| <= M`` is carried by the upper bound ``M`` on ``x+`` and ``x-``.
    """
    check(instance)
    A, b = instance.A, instance.b
    m, n = A.shape
    part = instance.partition
    box = not instance.conservative
    scale = 1.0 / instance.M if box else 1.0

    t_blocks = np.flatnonzero(instance.alpha > 0)
    T = len(t_blocks)
    t_col = {int(k): 2 * n + j for j, k in enumerate(t_blocks)}
    epi_entries = np.flatnonzero(np.isin(part.block_of, t_blocks))
    E = len(epi_entries)
    N = 2 * n + T + E

    c = np.zeros(N)
    beta_i = instance.beta_entries
    c[:n] = scale * beta_i
    c[n:2 * n] = scale * beta_i
    c[2 * n:2 * n + T] = scale * instance.alpha[t_blocks]

    Aeq = np.zeros((m + E, N))
    Aeq[:m, :n] = A
    Aeq[:m, n:2 * n] = -A
    for r, i in enumerate(epi_entries):
        row = m + r
        Aeq[row, i] = 1.0
        Aeq[row, n + i] = 1.0
        Aeq[row, t_col[int(part.block_of[i])]] = -1.0
        Aeq[row, 2 * n + T + r] = 1.0
    beq = np.concatenate([b, np.zeros(E)])

    lower = np.zeros(N)
    upper = np.full(N, np.inf)
    if box:
        upper[:2 * n] = instance.M

    labels = (
        [("x+", i) for i in range(n)]
        + [("x-", i) for i in range(n)]
        + [("t", int(k)) for k in t_blocks]
        + [("s", int(i)) for i in epi_entries]
    )
    lp = LinearProgram(c, Aeq, beq, lower, upper, labels)
    return BidualEncoding(lp, n, t_blocks, scale, instance)


def recover_solution(encoding: BidualEncoding, lp_solution: LpSolution) -> RelaxationSolution:
    if lp_solution.status is not Status.OPTIMAL:
        raise NonOptimalStatus(lp_solution.status)
    z = lp_solution.x
    x = z[encoding.xp] - z[encoding.xm]
    inf_norms, l1_norms = block_norms(encoding.instance.partition, x)
    return RelaxationSolution(
        Status.OPTIMAL, x, float(lp_solution.objective), inf_norms, l1_norms, lp_solution.iterations
    )


def trivially_infeasible(instance: ProblemInstance, tol: float = 1e-9) -> bool:
    """True when some row cannot reach ``b_i`` with ``|x| <= M``."""
    if instance.conservative:
        return False
    reach = instance.M * np.sum(np.abs(instance.A), axis=1)
    return bool(np.any(np.abs(instance.b) > reach * (1 + tol) + tol))


def solve_bidual(instance: ProblemInstance, opts: SolverOptions | None = None) -> RelaxationSolution:
    """Build, solve, and recover the bidual relaxation of ``instance``."""
    check(instance)
    if trivially_infeasible(instance):
        return RelaxationSolution(Status.INFEASIBLE, None, np.nan)
    enc = build_bidual_lp(instance)
    sol = solve_lp(enc.lp, opts)
    if sol.status is not Status.OPTIMAL:
        return RelaxationSolution(sol.status, None, np.nan, iterations=sol.iterations)
    return recover_solution(enc, sol)


def build_dual_lp(instance: ProblemInstance) -> LinearProgram:
    """Encode the Lagrangian dual as ``minimize -(b.l3 + 1.l6 + 1.l7)``.

    Columns, in order: ``l3`` (m, free), ``l4`` (n, >= 0), ``l5`` (n, >= 0),
    ``l6`` (K, <= 0), ``l7`` (n, <= 0), then nonnegative slacks for
    ``l6 <= alpha - P^T l4`` (K), ``l7 <= beta - l5`` (n), and the two sides
    of ``|A^T l3| <= (l4 + l5) / M`` (n each).
    """
    check(instance)
    if instance.conservative:
        raise ConservativeMNotSupported("the dual LP needs a finite box bound M")
    A, b = instance.A, instance.b
    m, n = A.shape
    K = instance.K
    inv_M = 1.0 / instance.M
    P = instance.partition.indicator()

    offs = np.cumsum([0, m, n, n, K, n, K, n, n, n])
    l3, l4, l5, l6, l7, se, sf, sgp, sgm = (slice(offs[i], offs[i + 1]) for i in range(9))
    N = int(offs[-1])
    R = K + 3 * n
    Aeq = np.zeros((R, N))
    beq = np.zeros(R)
    eye_n = np.eye(n)

    re = slice(0, K)
    Aeq[re, l4] = P.T
    Aeq[re, l6] = np.eye(K)
    Aeq[re, se] = np.eye(K)
    beq[re] = instance.alpha

    rf = slice(K, K + n)
    Aeq[rf, l5] = eye_n
    Aeq[rf, l7] = eye_n
    Aeq[rf, sf] = eye_n
    beq[rf] = instance.beta_entries

    rg1 = slice(K + n, K + 2 * n)
    Aeq[rg1, l3] = A.T
    Aeq[rg1, l4] = -inv_M * eye_n
    Aeq[rg1, l5] = -inv_M * eye_n
    Aeq[rg1, sgp] = eye_n

    rg2 = slice(K + 2 * n, K + 3 * n)
    Aeq[rg2, l3] = -A.T
    Aeq[rg2, l4] = -inv_M * eye_n
    Aeq[rg2, l5] = -inv_M * eye_n
    Aeq[rg2, sgm] = eye_n

    c = np.zeros(N)
    c[l3] = -b
    c[l6] = -1.0
    c[l7] = -1.0

    lower = np.zeros(N)
    upper = np.full(N, np.inf)
    lower[l3] = -np.inf
    lower[l6] = -np.inf
    upper[l6] = 0.0
    lower[l7] = -np.inf
    upper[l7] = 0.0

    labels = []
    for name, sl in zip(("l3", "l4", "l5", "l6", "l7", "se", "sf", "sg+", "sg-"),
                        (l3, l4, l5, l6, l7, se, sf, sgp, sgm)):
        labels += [(name, i) for i in range(sl.stop - sl.start)]
    return LinearProgram(c, Aeq, beq, lower, upper, labels)


def solve_dual(instance: ProblemInstance, opts: SolverOptions | None = None) -> DualSolution:
    lp = build_dual_lp(instance)
    sol = solve_lp(lp, opts)
    if sol.status is not Status.OPTIMAL:
        # an unbounded dual certifies an infeasible bidual, and vice versa
        obj = np.inf if sol.status is Status.UNBOUNDED else -np.inf
        return DualSolution(sol.status, None, None, None, None, None, obj)
    m, n, K = instance.m, instance.n, instance.K
    offs = np.cumsum([0, m, n, n, K, n])
    parts = [sol.x[offs[i]:offs[i + 1]] for i in range(5)]
    return DualSolution(Status.OPTIMAL, *parts, objective=-float(sol.objective))


def dual_violation(instance: ProblemInstance, dual: DualSolution) -> float:
    """Largest violation of the dual constraints by ``dual`` (0 when feasible)."""
    l3, l4, l5, l6, l7 = dual.lambda3, dual.lambda4, dual.lambda5, dual.lambda6, dual.lambda7
    P = instance.partition.indicator()
    cap = (l4 + l5) / instance.M
    ATl3 = instance.A.T @ l3
    viol = [
        -l4.min(initial=0.0),
        -l5.min(initial=0.0),
        l6.max(initial=0.0),
        l7.max(initial=0.0),
        np.max(l6 - (instance.alpha - P.T @ l4), initial=0.0),
        np.max(l7 - (instance.beta_entries - l5), initial=0.0),
        np.max(np.abs(ATl3) - cap, initial=0.0),
    ]
    return float(max(0.0, *viol))
