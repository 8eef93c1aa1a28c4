"""Dense tableau simplex for small standard-form linear programs.

Solves ``min c @ x  s.t.  A @ x = b, x >= 0``. Pricing is Dantzig's rule;
after a run of degenerate pivots the solver switches to Bland's rule for the
rest of the solve, which rules out cycling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
_PIVOT_TOL = 1e-11


class LPError(RuntimeError):
    pass


class InfeasibleLP(LPError):
    pass


class UnboundedLP(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    basis: np.ndarray
    iterations: int


def _pivot(T: np.ndarray, r: int, e: int) -> None:
    T[r] /= T[r, e]
    col = T[:, e].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T: np.ndarray, basis: np.ndarray, n_cols: int, max_iter: int) -> int:
    """Optimize the tableau in place over the first ``n_cols`` columns."""
    m = T.shape[0] - 1
    bland = False
    degenerate_run = 0
    for it in range(max_iter):
        cost = T[m, :n_cols]
        if bland:
            candidates = np.flatnonzero(cost < -OPT_TOL)
            if candidates.size == 0:
                return it
            e = int(candidates[0])
        else:
            e = int(np.argmin(cost))
            if cost[e] >= -OPT_TOL:
                return it
        col = T[:m, e]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            raise UnboundedLP("objective is unbounded below")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + FEAS_TOL]
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(col[ties])])
        if best <= FEAS_TOL:
            degenerate_run += 1
            if degenerate_run > 2 * m + 10:
                bland = True
        else:
            degenerate_run = 0
        _pivot(T, r, e)
        basis[r] = e
    raise LPError(f"simplex did not converge in {max_iter} iterations")


def simplex(c, A, b, basis=None, max_iter: int | None = None) -> LPResult:
    """Two-phase simplex.

    ``basis`` may name ``len(b)`` columns forming a feasible starting basis,
    in which case phase one is skipped.
    """
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float, ndmin=2)
    b = np.asarray(b, dtype=float).copy()
    m, n = A.shape
    if c.size != n or b.size != m:
        raise ValueError("inconsistent LP dimensions")
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    if basis is not None:
        basis = np.array(basis, dtype=int)
        T = np.zeros((m + 1, n + 1))
        T[:m, :n] = A
        T[:m, -1] = b
        for r, j in enumerate(basis):
            if abs(T[r, j]) <= _PIVOT_TOL:
                raise ValueError("supplied basis is singular")
            _pivot(T, r, j)
        if np.any(T[:m, -1] < -FEAS_TOL):
            raise ValueError("supplied basis is not primal feasible")
        iters = 0
    else:
        neg = b < 0
        A = A.copy()
        A[neg] *= -1.0
        b[neg] *= -1.0
        # Phase one: artificial identity block, minimize its sum.
        T = np.zeros((m + 1, n + m + 1))
        T[:m, :n] = A
        T[:m, n:n + m] = np.eye(m)
        T[:m, -1] = b
        T[m, :n] = -A.sum(axis=0)
        T[m, -1] = -b.sum()
        basis = np.arange(n, n + m)
        iters = _run(T, basis, n + m, max_iter)
        if -T[m, -1] > FEAS_TOL * max(1.0, float(np.abs(b).sum())):
            raise InfeasibleLP("no feasible point")
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] < n:
                continue
            candidates = np.flatnonzero(np.abs(T[r, :n]) > _PIVOT_TOL)
            if candidates.size:
                e = int(candidates[0])
                _pivot(T, r, e)
                basis[r] = e
            else:
                keep[r] = False  # redundant constraint
        rows = np.append(np.flatnonzero(keep), m)
        T = np.delete(T[rows], np.s_[n:n + m], axis=1)
        basis = basis[keep]
        m = basis.size

    T[m, :n] = c
    T[m, -1] = 0.0
    for r, j in enumerate(basis):
        if T[m, j] != 0.0:
            T[m] -= T[m, j] * T[r]
    iters += _run(T, basis, n, max_iter)

    x = np.zeros(n)
    x[basis] = np.maximum(T[:m, -1], 0.0)
    return LPResult(x=x, fun=float(c @ x), basis=basis.copy(), iterations=iters)
