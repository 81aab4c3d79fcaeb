"""Exact sparsity minimization by support enumeration.

Ground truth for small instances only: every candidate support is tested
for feasibility by least squares (and by a phase-one LP when a box bound
is active), in an order that makes the first feasible support optimal.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .model import (
    FEAS_TOL,
    BidualError,
    OracleResult,
    ProblemInstance,
    check,
    default_zero_tol,
    objective_of_support,
    support_of,
)
from .simplex import LinearProgram, phase_one


class BudgetExceeded(BidualError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_entries: int = 20
    max_blocks: int = 12
    max_subsets: int = 2 ** 22
    time_budget: float = 60.0

    def __post_init__(self):
        if min(self.max_entries, self.max_blocks, self.max_subsets) <= 0 or self.time_budget <= 0:
            raise ValueError("oracle budget fields must be positive")


def solve_on_support(A, b, cols, M=None, feas_tol: float = FEAS_TOL) -> Optional[np.ndarray]:
    """A vector supported on ``cols`` solving ``A x = b`` (and ``|x| <= M``), or None."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    cols = np.asarray(cols, dtype=int)
    tol = feas_tol * (1.0 + float(np.max(np.abs(b), initial=0.0)))
    x = np.zeros(n)
    if cols.size == 0:
        return x if np.max(np.abs(b), initial=0.0) <= tol else None
    AS = A[:, cols]
    xs = np.linalg.lstsq(AS, b, rcond=None)[0]
    if np.max(np.abs(AS @ xs - b), initial=0.0) > tol:
        return None
    if M is not None and np.max(np.abs(xs)) > M + feas_tol:
        # minimum-norm point leaves the box; look for any point inside it
        lp = LinearProgram(np.zeros(cols.size), AS, b, -M, M)
        xs = phase_one(lp)
        if xs is None:
            return None
        xs = np.clip(xs, -M, M)
    x[cols] = xs
    return x


def _box(instance: ProblemInstance):
    return None if instance.conservative else float(instance.M)


def _search(instance, candidates: Iterable, budget: OracleBudget, fallback_cols):
    """Test candidate column sets in order; return (witness, exhaustive, tested)."""
    A, b, M = instance.A, instance.b, _box(instance)
    start = time.monotonic()
    tested = 0
    for cols in candidates:
        if tested >= budget.max_subsets or time.monotonic() - start > budget.time_budget:
            return solve_on_support(A, b, fallback_cols, M), False, tested
        tested += 1
        x = solve_on_support(A, b, cols, M)
        if x is not None:
            return x, True, tested
    return None, True, tested


def _result(value_fn, witness, exhaustive, tested) -> OracleResult:
    if witness is None:
        return OracleResult(math.inf, frozenset(), None, exhaustive, tested)
    active = support_of(witness, default_zero_tol(witness))
    return OracleResult(
        float(value_fn(active)), frozenset(int(i) for i in np.flatnonzero(active)), witness, exhaustive, tested
    )


def oracle_entry(instance: ProblemInstance, budget: OracleBudget = OracleBudget()) -> OracleResult:
    """Minimum number of nonzeros over ``A x = b`` (and the box, if any)."""
    check(instance)
    n = instance.n
    if n > budget.max_entries:
        raise BudgetExceeded(f"n = {n} exceeds max_entries = {budget.max_entries}")
    candidates = (
        np.array(S, dtype=int) for size in range(n + 1) for S in itertools.combinations(range(n), size)
    )
    witness, exhaustive, tested = _search(instance, candidates, budget, np.arange(n))
    return _result(lambda act: act.sum(), witness, exhaustive, tested)


def oracle_group(instance: ProblemInstance, budget: OracleBudget = OracleBudget()) -> OracleResult:
    """Minimum number of active blocks over ``A x = b`` (and the box, if any)."""
    check(instance)
    part = instance.partition
    K = part.K
    if K > budget.max_blocks:
        raise BudgetExceeded(f"K = {K} exceeds max_blocks = {budget.max_blocks}")
    block_cols = [np.arange(part.n)[part.block_slice(k)] for k in range(K)]

    def cols_of(blocks):
        return np.concatenate([block_cols[k] for k in blocks]) if blocks else np.zeros(0, dtype=int)

    candidates = (cols_of(Bs) for size in range(K + 1) for Bs in itertools.combinations(range(K), size))
    witness, exhaustive, tested = _search(instance, candidates, budget, np.arange(part.n))
    starts = part.offsets[:-1]

    def n_blocks(active):
        return int(np.count_nonzero(np.add.reduceat(active.astype(int), starts)))

    return _result(n_blocks, witness, exhaustive, tested)


def oracle_mixed(instance: ProblemInstance, gamma: float, budget: OracleBudget = OracleBudget()) -> OracleResult:
    """Minimum of (active x-blocks) + gamma * (nonzero error entries).

    The last block of the partition is the error block ``e``. Among
    optimal solutions, fewer active blocks win, then fewer error entries.
    """
    check(instance)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    part = instance.partition
    Kx = part.K - 1
    m = part.sizes[-1]
    if Kx > budget.max_blocks or Kx + m > budget.max_entries:
        raise BudgetExceeded("mixed enumeration exceeds the oracle budget")
    total = 2 ** (Kx + m)
    if total > budget.max_subsets:
        raise BudgetExceeded(f"{total} candidate supports exceed max_subsets = {budget.max_subsets}")
    block_cols = [np.arange(part.n)[part.block_slice(k)] for k in range(part.K)]
    err_cols = block_cols[-1]

    bmask = np.arange(2 ** Kx)
    emask = np.arange(2 ** m)
    nb = np.array([bin(v).count("1") for v in bmask])
    ne = np.array([bin(v).count("1") for v in emask])
    BB, EE = np.meshgrid(bmask, emask, indexing="ij")
    NB, NE = np.meshgrid(nb, ne, indexing="ij")
    cost = np.round(NB + gamma * NE, 12)
    order = np.lexsort((_lex_key(EE.ravel(), m), _lex_key(BB.ravel(), Kx), NE.ravel(), NB.ravel(), cost.ravel()))

    def candidates():
        for idx in order:
            bm, em = int(BB.flat[idx]), int(EE.flat[idx])
            cols = [block_cols[k] for k in range(Kx) if bm >> k & 1]
            cols.append(err_cols[[i for i in range(m) if em >> i & 1]])
            yield np.concatenate(cols)

    witness, exhaustive, tested = _search(instance, candidates(), budget, np.arange(part.n))
    starts = part.offsets[:-1]

    def value(active):
        counts = np.add.reduceat(active.astype(int), starts)
        return np.count_nonzero(counts[:-1]) + gamma * counts[-1]

    return _result(value, witness, exhaustive, tested)


def _lex_key(masks, width):
    """Sort key that orders bitmasks lexicographically by their sorted index lists."""
    masks = np.asarray(masks, dtype=np.int64)
    # reversing bit order makes a lower first index compare smaller
    rev = np.zeros_like(masks)
    for i in range(width):
        rev |= ((masks >> i) & 1) << (width - 1 - i)
    return -rev


def weighted_oracle(instance: ProblemInstance, budget: OracleBudget = OracleBudget()) -> OracleResult:
    """Exact minimum of the weighted objective for arbitrary nonnegative weights.

    Blocks without an entry weight are switched on or off as a whole (a
    partial block costs the same and is never easier to satisfy); blocks
    with no weight at all are always on. Candidate supports are visited in
    order of increasing objective, so the first feasible one is optimal.
    """
    check(instance)
    part = instance.partition
    alpha, beta = instance.alpha, instance.beta
    units = []  # (block, columns)
    free_cols = []
    for k in range(part.K):
        cols = np.arange(part.n)[part.block_slice(k)]
        if alpha[k] == 0 and beta[k] == 0:
            free_cols.append(cols)
        elif beta[k] == 0:
            units.append((k, cols))
        else:
            units.extend((k, cols[i:i + 1]) for i in range(cols.size))
    U = len(units)
    if 2 ** U > budget.max_subsets:
        raise BudgetExceeded(f"2^{U} candidate supports exceed max_subsets = {budget.max_subsets}")
    free = np.concatenate(free_cols) if free_cols else np.zeros(0, dtype=int)

    masks = np.arange(2 ** U, dtype=np.int64)
    cost = np.zeros(masks.size)
    popcount = np.zeros(masks.size, dtype=np.int64)
    for k in range(part.K):
        members = [u for u, (kk, _) in enumerate(units) if kk == k]
        if not members:
            continue
        cnt = np.zeros(masks.size, dtype=np.int64)
        for u in members:
            cnt += (masks >> u) & 1
        cost += alpha[k] * (cnt > 0) + beta[k] * cnt
        popcount += cnt
    order = np.lexsort((_lex_key(masks, U), popcount, np.round(cost, 12)))

    def candidates():
        for mask in order:
            mask = int(mask)
            cols = [units[u][1] for u in range(U) if mask >> u & 1]
            yield np.sort(np.concatenate(cols + [free]))

    witness, exhaustive, tested = _search(instance, candidates(), budget, np.arange(part.n))
    return _result(lambda act: objective_of_support(instance, act), witness, exhaustive, tested)
