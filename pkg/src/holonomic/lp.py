"""Dense two-phase primal simplex with Bland anti-cycling for min c.x, A x = b, x >= 0.

Small and slow on purpose: it is the reference backend used to cross-check
the production solver and to produce infeasibility / unboundedness
certificates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
STALL_LIMIT = 50


@dataclass
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray | None
    objective: float
    iterations: int
    certificate: np.ndarray | None = None  # Farkas y (infeasible) or ray (unbounded)
    basis: np.ndarray | None = None


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T: np.ndarray, basis: np.ndarray, allowed: int, max_iter: int, tol: float, rule: str):
    """Iterate on tableau T whose last row is the reduced-cost row; columns >= allowed never enter.

    rule "bland": lowest-index entering column throughout. rule "hybrid":
    steepest reduced cost, falling back to Bland while pivots stay degenerate.
    """
    m = T.shape[0] - 1
    it = 0
    stall = 0
    while it < max_iter:
        reduced = T[-1, :allowed]
        enter = np.flatnonzero(reduced < -tol)
        if len(enter) == 0:
            return "optimal", it, None
        if rule == "bland" or stall >= STALL_LIMIT:
            c = int(enter[0])
        else:
            c = int(enter[np.argmin(reduced[enter])])
        col = T[:m, c]
        pos = col > tol
        if not np.any(pos):
            return "unbounded", it, c
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        r = int(ties[np.argmin(basis[ties])])
        stall = stall + 1 if best <= tol else 0
        _pivot(T, r, c)
        basis[r] = c
        it += 1
    return "iteration_limit", it, None


def simplex(c, A, b, max_iter: int = 50_000, tol: float = PIVOT_TOL, rule: str = "hybrid") -> SimplexResult:
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    flip = np.where(b < 0, -1.0, 1.0)
    A *= flip[:, None]
    b *= flip

    # phase I: artificials n..n+m-1
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    status, it1, _ = _run(T, basis, n, max_iter, tol, rule)
    if status == "iteration_limit":
        return SimplexResult(status, None, np.nan, it1)
    if -T[-1, -1] > tol * max(1.0, np.abs(b).max(initial=0.0)):
        return SimplexResult("infeasible", None, np.nan, it1, certificate=flip * (1.0 - T[-1, n : n + m]))

    # drive artificials out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] >= n:
            nz = np.flatnonzero(np.abs(T[r, :n]) > tol)
            if len(nz):
                _pivot(T, r, int(nz[0]))
                basis[r] = nz[0]
            else:
                keep[r] = False
    rows = np.flatnonzero(keep)
    T2 = np.zeros((len(rows) + 1, n + 1))
    T2[:-1, :n] = T[rows, :n]
    T2[:-1, -1] = T[rows, -1]
    basis = basis[rows]
    T2[-1, :n] = c
    T2[-1, -1] = 0.0
    for r, j in enumerate(basis):
        T2[-1] -= c[j] * T2[r]
    status, it2, enter = _run(T2, basis, n, max_iter - it1, tol, rule)
    its = it1 + it2
    if status == "unbounded":
        ray = np.zeros(n)
        ray[enter] = 1.0
        ray[basis] = -T2[:-1, enter]
        return SimplexResult("unbounded", None, -np.inf, its, certificate=ray, basis=basis)
    if status == "iteration_limit":
        return SimplexResult(status, None, np.nan, its)
    x = np.zeros(n)
    x[basis] = T2[:-1, -1]
    x[x < 0] = 0.0
    return SimplexResult("optimal", x, float(c @ x), its, basis=basis)

