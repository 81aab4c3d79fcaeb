"""Independent LP checkers used only by the tests.

``vertex_min`` enumerates every basic solution of a box-bounded LP.
``rational_status`` runs an exact tableau simplex (Bland's rule) over
``fractions.Fraction`` on the standard-form conversion of the LP.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def vertex_min(c, Aeq, beq, lower, upper, tol=1e-9):
    """Minimum of c.x over the vertices of {Aeq x = beq, lower <= x <= upper}.

    Requires finite bounds and full-row-rank Aeq. Returns (value, x) or
    (inf, None) when no vertex is feasible.
    """
    c, Aeq, beq = np.asarray(c, float), np.asarray(Aeq, float).reshape(-1, len(c)), np.asarray(beq, float)
    lower, upper = np.asarray(lower, float), np.asarray(upper, float)
    R, N = Aeq.shape
    best, best_x = np.inf, None
    for B in itertools.combinations(range(N), R):
        B = list(B)
        NB = [j for j in range(N) if j not in B]
        AB = Aeq[:, B]
        if R and abs(np.linalg.det(AB)) < 1e-12:
            continue
        # every nonbasic variable at either bound: one row per pattern
        pats = np.array(list(itertools.product((0, 1), repeat=len(NB))), dtype=float).reshape(2 ** len(NB), len(NB))
        XN = lower[NB] + pats * (upper[NB] - lower[NB])
        if R:
            XB = np.linalg.solve(AB, (beq[:, None] - Aeq[:, NB] @ XN.T)).T
        else:
            XB = np.zeros((XN.shape[0], 0))
        ok = np.all(XB >= lower[B] - tol, axis=1) & np.all(XB <= upper[B] + tol, axis=1)
        if not ok.any():
            continue
        X = np.zeros((XN.shape[0], N))
        X[:, NB] = XN
        X[:, B] = XB
        vals = X @ c
        vals[~ok] = np.inf
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_x = float(vals[i]), X[i]
    return best, best_x


def _F(v):
    return Fraction(v) if not isinstance(v, Fraction) else v


def _tableau_simplex(T, basis, ncols):
    """Bland's rule on tableau T (last row = objective, last col = rhs). Minimizes."""
    m = len(T) - 1
    while True:
        obj = T[-1]
        enter = next((j for j in range(ncols) if obj[j] < 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        r = best[1]
        piv = T[r][enter]
        T[r] = [v / piv for v in T[r]]
        for i in range(len(T)):
            if i != r and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [a - f * b for a, b in zip(T[i], T[r])]
        basis[r] = enter


def rational_status(c, Aeq, beq, lower, upper) -> str:
    """Exact status ('optimal' | 'infeasible' | 'unbounded') of a rational LP."""
    N = len(c)
    cols = []  # each original var -> list of (new col, coeff) plus constant offset
    rows_extra = []
    offset = [Fraction(0)] * N
    nvar = 0
    for j in range(N):
        lo, up = lower[j], upper[j]
        if np.isfinite(lo):
            offset[j] = _F(lo)
            cols.append([(nvar, Fraction(1))])
            if np.isfinite(up):
                rows_extra.append((nvar, _F(up) - _F(lo)))
            nvar += 1
        elif np.isfinite(up):
            offset[j] = _F(up)
            cols.append([(nvar, Fraction(-1))])
            nvar += 1
        else:
            cols.append([(nvar, Fraction(1)), (nvar + 1, Fraction(-1))])
            nvar += 2
    nslack = len(rows_extra)
    total = nvar + nslack
    rows, rhs = [], []
    for i in range(len(beq)):
        row = [Fraction(0)] * total
        r = _F(beq[i])
        for j in range(N):
            a = _F(Aeq[i][j])
            r -= a * offset[j]
            for col, s in cols[j]:
                row[col] += a * s
        rows.append(row)
        rhs.append(r)
    for k, (col, width) in enumerate(rows_extra):
        row = [Fraction(0)] * total
        row[col] = Fraction(1)
        row[nvar + k] = Fraction(1)
        rows.append(row)
        rhs.append(width)
    cost = [Fraction(0)] * total
    for j in range(N):
        for col, s in cols[j]:
            cost[col] += _F(c[j]) * s
    for i in range(len(rows)):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]
    m = len(rows)
    # phase one with artificials
    T = [rows[i] + [Fraction(int(i == k)) for k in range(m)] + [rhs[i]] for i in range(m)]
    obj = [Fraction(0)] * (total + m + 1)
    for i in range(m):
        obj = [a - b for a, b in zip(obj, T[i])]
    for k in range(m):
        obj[total + k] = Fraction(0)
    T.append(obj)
    basis = [total + i for i in range(m)]
    _tableau_simplex(T, basis, total + m)
    if -T[-1][-1] != 0:
        return "infeasible"
    # drive zero-level artificials out where possible
    for i in range(m):
        if basis[i] >= total:
            j = next((j for j in range(total) if T[i][j] != 0), None)
            if j is not None:
                piv = T[i][j]
                T[i] = [v / piv for v in T[i]]
                for r in range(len(T)):
                    if r != i and T[r][j] != 0:
                        f = T[r][j]
                        T[r] = [a - f * b for a, b in zip(T[r], T[i])]
                basis[i] = j
    keep = [i for i in range(m) if basis[i] < total]
    T2 = [T[i][:total] + [T[i][-1]] for i in keep]
    b2 = [basis[i] for i in keep]
    obj = cost + [Fraction(0)]
    for i, bi in enumerate(b2):
        if obj[bi] != 0:
            f = obj[bi]
            obj = [a - f * b for a, b in zip(obj, T2[i])]
    T2.append(obj)
    return _tableau_simplex(T2, b2, total)
