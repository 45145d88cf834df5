"""Dense two-phase simplex for the tiny linear programs used by the geometry code.

Problems here have at most a few dozen rows and columns, so a full tableau
with Bland's anti-cycling rule is both fast enough and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-12
_COST_TOL = 1e-11


@dataclass(frozen=True)
class LPResult:
    status: str
    x: np.ndarray | None = None
    fun: float | None = None
    infeasibility: float = 0.0

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _run_simplex(T: np.ndarray, basis: list[int], ncols: int, max_iter: int) -> str:
    """Minimise the objective held in the last row of ``T`` over columns ``[0, ncols)``.

    The last row stores reduced costs; the last column stores the right-hand side.
    """
    m = T.shape[0] - 1
    for _ in range(max_iter):
        costs = T[m, :ncols]
        entering = -1
        for j in range(ncols):
            if costs[j] < -_COST_TOL:
                entering = j
                break
        if entering < 0:
            return OPTIMAL
        col = T[:m, entering]
        best_row = -1
        best_ratio = np.inf
        for r in range(m):
            if col[r] > _PIVOT_TOL:
                ratio = T[r, -1] / col[r]
                if ratio < best_ratio - 1e-15 or (
                    abs(ratio - best_ratio) <= 1e-15 and basis[r] < basis[best_row]
                ):
                    best_ratio = ratio
                    best_row = r
        if best_row < 0:
            return UNBOUNDED
        _pivot(T, basis, best_row, entering)
    raise RuntimeError("simplex iteration limit reached")


def linprog(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    free=None,
    feas_tol: float = 1e-9,
    max_iter: int = 5000,
) -> LPResult:
    """Minimise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x == b_eq``.

    Variables are non-negative unless flagged in the boolean mask ``free``.
    A problem is reported infeasible when the phase-one optimum exceeds
    ``feas_tol``.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape[0] != b_ub.size or A_eq.shape[0] != b_eq.size:
        raise ValueError("constraint matrix and right-hand side disagree in length")

    # split free variables: x = x+ - x-
    free_idx = np.flatnonzero(free)
    n_std = n + free_idx.size
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    n_struct = n_std + m_ub  # structural + slack columns

    A = np.zeros((m, n_struct))
    A[:m_ub, :n] = A_ub
    A[m_ub:, :n] = A_eq
    if free_idx.size:
        A[:m_ub, n:n_std] = -A_ub[:, free_idx]
        A[m_ub:, n:n_std] = -A_eq[:, free_idx]
    A[np.arange(m_ub), n_std + np.arange(m_ub)] = 1.0
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b = np.where(neg, -b, b)

    cost = np.zeros(n_struct)
    cost[:n] = c
    if free_idx.size:
        cost[n:n_std] = -c[free_idx]

    if m == 0:
        if np.any(cost < -_COST_TOL):
            return LPResult(UNBOUNDED)
        return LPResult(OPTIMAL, np.zeros(n), 0.0)

    # phase one: an artificial variable per row
    T = np.zeros((m + 1, n_struct + m + 1))
    T[:m, :n_struct] = A
    T[:m, n_struct : n_struct + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n_struct] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(n_struct, n_struct + m))
    _run_simplex(T, basis, n_struct + m, max_iter)
    infeas = -T[m, -1]
    if infeas > feas_tol:
        return LPResult(INFEASIBLE, infeasibility=float(infeas))

    # drive artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n_struct:
            row = T[r, :n_struct]
            j = int(np.argmax(np.abs(row))) if n_struct else 0
            if n_struct and abs(row[j]) > 1e-9:
                _pivot(T, basis, r, j)
                keep.append(r)
        else:
            keep.append(r)
    T = np.vstack([T[keep][:, list(range(n_struct)) + [T.shape[1] - 1]], np.zeros((1, n_struct + 1))])
    basis = [basis[r] for r in keep]
    m2 = len(keep)

    # phase two
    T[m2, :n_struct] = cost
    for r, j in enumerate(basis):
        if T[m2, j] != 0.0:
            T[m2] -= T[m2, j] * T[r]
    status = _run_simplex(T, basis, n_struct, max_iter)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)

    x_std = np.zeros(n_struct)
    for r, j in enumerate(basis):
        x_std[j] = T[r, -1]
    x = x_std[:n].copy()
    if free_idx.size:
        x[free_idx] -= x_std[n:n_std]
    return LPResult(OPTIMAL, x, float(c @ x), float(max(infeas, 0.0)))
