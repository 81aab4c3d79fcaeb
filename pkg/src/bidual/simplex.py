"""Dense bounded-variable revised simplex.

Solves::

    minimize    c @ x
    subject to  Aeq @ x = beq,   lower <= x <= upper

with infinite bounds allowed. Phase one appends one artificial column per
row. The basis inverse is kept explicitly, updated by rank-one (eta)
updates and refactorized every ``refactor_every`` pivots.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import FEAS_TOL, PIVOT_TOL, BidualError, Status

__all__ = [
    "LinearProgram",
    "LpSolution",
    "Basis",
    "SolverOptions",
    "solve_lp",
    "phase_one",
    "format_lp",
    "MaxIterationsExceeded",
    "NumericalBreakdown",
]


class SimplexError(BidualError):
    pass


class MaxIterationsExceeded(SimplexError):
    def __init__(self, solution):
        self.solution = solution
        super().__init__(f"iteration limit reached after {solution.iterations} iterations")


class NumericalBreakdown(SimplexError):
    pass


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    Aeq: np.ndarray
    beq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    column_labels: Optional[Sequence] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        N = c.shape[0]
        Aeq = np.asarray(self.Aeq, dtype=float)
        if Aeq.size == 0:
            Aeq = Aeq.reshape(0, N)
        beq = np.asarray(self.beq, dtype=float).ravel()
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (N,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (N,)).copy()
        for name, arr in (("c", c), ("Aeq", Aeq), ("beq", beq), ("lower", lower), ("upper", upper)):
            if np.any(np.isnan(arr)):
                raise ValueError(f"{name} contains NaN")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if Aeq.ndim != 2 or Aeq.shape[1] != N or Aeq.shape[0] != beq.shape[0]:
            raise ValueError(f"inconsistent LP shapes: c {c.shape}, Aeq {Aeq.shape}, beq {beq.shape}")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        if not np.all(np.isfinite(c)) or not np.all(np.isfinite(Aeq)) or not np.all(np.isfinite(beq)):
            raise ValueError("c, Aeq and beq must be finite")
        if np.any(lower == np.inf) or np.any(upper == -np.inf):
            raise ValueError("bounds must admit a finite value")

    @property
    def N(self) -> int:
        return self.c.shape[0]

    @property
    def R(self) -> int:
        return self.Aeq.shape[0]


@dataclass(frozen=True)
class Basis:
    """Restartable basis: basic column indices plus nonbasic bound status.

    Indices ``>= N`` refer to the artificial columns ``art_sign[i] * e_i``.
    """

    basic: tuple
    at_upper: tuple
    art_sign: tuple


@dataclass(frozen=True)
class LpSolution:
    status: Status
    x: Optional[np.ndarray]
    objective: float
    dual_y: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    iterations: int = 0
    basis: Optional[Basis] = None
    dual_objective: float = np.nan
    flagged: bool = False


@dataclass
class SolverOptions:
    feas_tol: float = FEAS_TOL
    pivot_tol: float = PIVOT_TOL
    opt_tol: float = 1e-9
    max_iter: int = 100_000
    refactor_every: int = 50
    # Bland's rule kicks in after this many consecutive degenerate pivots; None means 3 * N.
    bland_after: Optional[int] = None


class _Engine:
    def __init__(self, lp: LinearProgram, opts: SolverOptions, art_sign):
        self.lp = lp
        self.opts = opts
        N, R = lp.N, lp.R
        self.N, self.R = N, R
        self.A = np.hstack([lp.Aeq, np.diag(np.asarray(art_sign, dtype=float))]) if R else lp.Aeq.copy()
        self.art_sign = np.asarray(art_sign, dtype=float)
        self.lo = np.concatenate([lp.lower, np.zeros(R)])
        self.up = np.concatenate([lp.upper, np.full(R, np.inf)])
        self.x = np.zeros(N + R)
        self.basic = np.arange(N, N + R)
        self.is_basic = np.zeros(N + R, dtype=bool)
        self.is_basic[self.basic] = True
        self.Binv = np.eye(R)
        self.iterations = 0
        self.since_refactor = 0
        self.bnorm = 1.0 + (float(np.max(np.abs(lp.beq))) if R else 0.0)
        self.bland_after = opts.bland_after if opts.bland_after is not None else 3 * N

    def nonbasic_start(self, at_upper=None):
        lo, up = self.lo, self.up
        x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(up), up, 0.0))
        if at_upper is not None:
            mask = np.asarray(at_upper, dtype=bool) & np.isfinite(up)
            x[mask] = up[mask]
        self.x = x

    def refactor(self):
        B = self.A[:, self.basic]
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("singular basis matrix") from exc
        if not np.all(np.isfinite(Binv)) or np.linalg.norm(Binv @ B - np.eye(self.R), np.inf) > 1e-6:
            raise NumericalBreakdown("basis matrix too ill-conditioned to refactorize")
        self.Binv = Binv
        self.since_refactor = 0
        self.recompute_basic_values()

    def recompute_basic_values(self):
        if not self.R:
            return
        nb = ~self.is_basic
        rhs = self.lp.beq - self.A[:, nb] @ self.x[nb]
        self.x[self.basic] = self.Binv @ rhs

    def run(self, cost):
        """Iterate to optimality for ``cost``; returns 'optimal' or 'unbounded'."""
        opts = self.opts
        lo, up = self.lo, self.up
        movable = lo < up
        degenerate_run = 0
        while True:
            if self.iterations >= opts.max_iter:
                return "limit"
            y = cost[self.basic] @ self.Binv if self.R else np.zeros(0)
            d = cost - y @ self.A
            x = self.x
            # nonbasic variables that can still improve the objective
            at_lo = x <= lo
            at_up = x >= up
            can_inc = movable & ~at_up & (d < -opts.opt_tol)
            can_dec = movable & ~at_lo & (d > opts.opt_tol)
            elig = (can_inc | can_dec) & ~self.is_basic
            if not elig.any():
                return "optimal"
            idx = np.flatnonzero(elig)
            bland = degenerate_run >= self.bland_after
            if bland:
                j = int(idx[0])
            else:
                j = int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if can_inc[j] else -1.0

            col = self.Binv @ self.A[:, j] if self.R else np.zeros(0)
            delta = -direction * col  # change of x_B per unit step

            t_best = up[j] - lo[j]
            leave = -1
            if self.R:
                xb = x[self.basic]
                lob = lo[self.basic]
                upb = up[self.basic]
                ratios = np.full(self.R, np.inf)
                dec = delta < -opts.pivot_tol
                inc = delta > opts.pivot_tol
                with np.errstate(invalid="ignore", divide="ignore"):
                    ratios[dec] = (xb[dec] - lob[dec]) / -delta[dec]
                    ratios[inc] = (upb[inc] - xb[inc]) / delta[inc]
                ratios = np.maximum(ratios, 0.0)
                t_min = ratios.min()
                if t_min < t_best:
                    tied = np.flatnonzero(ratios <= t_min + 1e-12 * max(1.0, t_min))
                    if bland:
                        leave = int(tied[np.argmin(self.basic[tied])])
                    else:
                        leave = int(tied[np.argmax(np.abs(delta[tied]))])
                    t_best = ratios[leave]
            if not np.isfinite(t_best):
                return "unbounded"

            self.iterations += 1
            degenerate_run = degenerate_run + 1 if t_best <= 1e-12 else 0
            x[j] += direction * t_best
            if self.R:
                x[self.basic] += t_best * delta
            if leave < 0:
                # bound flip, basis unchanged
                x[j] = up[j] if direction > 0 else lo[j]
                continue
            out = self.basic[leave]
            x[out] = lo[out] if delta[leave] < 0 else up[out]
            self.basic[leave] = j
            self.is_basic[out] = False
            self.is_basic[j] = True
            pivot = col[leave]
            row = self.Binv[leave] / pivot
            self.Binv -= np.outer(col, row)
            self.Binv[leave] = row
            self.since_refactor += 1
            if self.since_refactor >= opts.refactor_every:
                self.refactor()

    def artificial_sum(self):
        return float(np.sum(self.x[self.N:]))

    def basis(self) -> Basis:
        nb_up = (~self.is_basic[: self.N]) & (self.x[: self.N] >= self.up[: self.N]) & np.isfinite(self.up[: self.N])
        return Basis(tuple(int(i) for i in self.basic), tuple(bool(v) for v in nb_up), tuple(float(s) for s in self.art_sign))

    def basis_feasible(self):
        xb = self.x[self.basic]
        tol = self.opts.feas_tol * self.bnorm
        return bool(np.all(xb >= self.lo[self.basic] - tol) and np.all(xb <= self.up[self.basic] + tol))


def _start(lp: LinearProgram, opts: SolverOptions) -> _Engine:
    lo, up = lp.lower, lp.upper
    x0 = np.where(np.isfinite(lo), lo, np.where(np.isfinite(up), up, 0.0))
    resid = lp.beq - lp.Aeq @ x0
    sign = np.where(resid >= 0, 1.0, -1.0)
    eng = _Engine(lp, opts, sign)
    eng.nonbasic_start()
    eng.x[eng.N:] = np.abs(resid)
    eng.Binv = np.diag(sign)
    return eng


def _phase_one(eng: _Engine) -> bool:
    cost = np.concatenate([np.zeros(eng.N), np.ones(eng.R)])
    state = eng.run(cost)
    if state == "limit":
        return False
    if eng.R:
        eng.refactor()
    return True


def _finish(eng: _Engine, status: Status, flagged=False) -> LpSolution:
    lp = eng.lp
    N = eng.N
    x = eng.x[:N].copy()
    cost = np.concatenate([lp.c, np.zeros(eng.R)])
    if status is not Status.OPTIMAL:
        return LpSolution(status, None if status is Status.INFEASIBLE else x, np.nan,
                          iterations=eng.iterations, basis=eng.basis(), flagged=flagged)
    y = cost[eng.basic] @ eng.Binv if eng.R else np.zeros(0)
    d = lp.c - y @ lp.Aeq if eng.R else lp.c.copy()
    d[eng.is_basic[:N]] = 0.0
    d[np.abs(d) <= eng.opts.opt_tol] = 0.0
    # bound terms of the dual objective; a wrong-signed reduced cost on an
    # infinite bound makes it -inf, exposing dual infeasibility
    lo, up = lp.lower, lp.upper
    with np.errstate(invalid="ignore"):
        term = np.where(d > 0, lo * d, np.where(d < 0, up * d, 0.0))
    dual_obj = float(lp.beq @ y + term.sum())
    obj = float(lp.c @ x)
    return LpSolution(Status.OPTIMAL, x, obj, y, d, eng.iterations, eng.basis(), dual_obj, flagged)


def phase_one(lp: LinearProgram, opts: Optional[SolverOptions] = None):
    """Find a basic feasible point; returns the point, or None if infeasible."""
    opts = opts or SolverOptions()
    eng = _start(lp, opts)
    if not _phase_one(eng):
        raise MaxIterationsExceeded(_finish(eng, Status.INFEASIBLE, flagged=True))
    if eng.artificial_sum() > opts.feas_tol * eng.bnorm:
        return None
    return eng.x[: eng.N].copy()


def _warm_engine(lp: LinearProgram, opts: SolverOptions, basis: Basis) -> Optional[_Engine]:
    if len(basis.basic) != lp.R or len(basis.at_upper) != lp.N or len(basis.art_sign) != lp.R:
        return None
    eng = _Engine(lp, opts, basis.art_sign)
    eng.up[eng.N:] = 0.0
    eng.nonbasic_start(list(basis.at_upper) + [False] * lp.R)
    eng.basic = np.array(basis.basic, dtype=int)
    eng.is_basic[:] = False
    eng.is_basic[eng.basic] = True
    try:
        if lp.R:
            eng.refactor()
    except NumericalBreakdown:
        return None
    return eng if eng.basis_feasible() else None


def solve_lp(lp: LinearProgram, opts: Optional[SolverOptions] = None, basis: Optional[Basis] = None) -> LpSolution:
    """Solve ``lp``; a feasible ``basis`` from a previous solve skips phase one.

    Raises MaxIterationsExceeded (carrying the last iterate, ``flagged``) or
    NumericalBreakdown.
    """
    opts = opts or SolverOptions()
    eng = _warm_engine(lp, opts, basis) if basis is not None else None
    if eng is None:
        eng = _start(lp, opts)
        if not _phase_one(eng):
            raise MaxIterationsExceeded(_finish(eng, Status.INFEASIBLE, flagged=True))
        if eng.artificial_sum() > opts.feas_tol * eng.bnorm:
            return _finish(eng, Status.INFEASIBLE)
        # artificials are pinned at zero from here on
        eng.up[eng.N:] = 0.0
        eng.x[eng.N:] = np.where(eng.is_basic[eng.N:], eng.x[eng.N:], 0.0)
    cost = np.concatenate([lp.c, np.zeros(eng.R)])
    state = eng.run(cost)
    if state == "limit":
        raise MaxIterationsExceeded(_finish(eng, Status.OPTIMAL, flagged=True))
    if state == "unbounded":
        return _finish(eng, Status.UNBOUNDED)
    if eng.R:
        eng.recompute_basic_values()
    return _finish(eng, Status.OPTIMAL)


def format_lp(lp: LinearProgram) -> str:
    """Fixed-width text dump: header, cost row, [Aeq | beq] rows, lower row, upper row."""
    buf = io.StringIO()
    fmt = "{:>14.6g}".format
    buf.write(f"LP {lp.N} {lp.R}\n")
    buf.write(" ".join(fmt(v) for v in lp.c) + "\n")
    for i in range(lp.R):
        buf.write(" ".join(fmt(v) for v in lp.Aeq[i]) + " | " + fmt(lp.beq[i]) + "\n")
    buf.write(" ".join(fmt(v) for v in lp.lower) + "\n")
    buf.write(" ".join(fmt(v) for v in lp.upper) + "\n")
    return buf.getvalue()
