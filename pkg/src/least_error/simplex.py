"""Dense revised simplex for ``min c^T x  s.t.  A x = b, x >= 0``.

Two phases with artificial variables.  Pivoting follows Bland's rule
(smallest eligible entering index, smallest basic index among tied leaving
candidates), which rules out cycling and makes the returned basic solution a
deterministic function of the input.  The basis inverse is kept explicitly,
updated by the pivot's elementary row operations and recomputed from scratch
every ``REFACTOR_EVERY`` pivots.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import Infeasible, IterationLimit, RankDeficient, Unbounded

OPT_TOL = 1e-9
FEAS_TOL = 1e-8
PIVOT_TOL = 1e-11
REFACTOR_EVERY = 50


@dataclass
class SimplexResult:
    x: np.ndarray
    y: np.ndarray  # equality multipliers, c_B^T B^{-1}
    basis: np.ndarray
    objective: float
    iterations: int


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def tick(self):
        self.used += 1
        if self.used > self.limit:
            raise IterationLimit(f"simplex exceeded {self.limit} iterations")


def _iterate(A, b, c, basis, budget, opt_tol):
    Binv, since = np.linalg.inv(A[:, basis]), 0
    while True:
        x_b = Binv @ b
        y = c[basis] @ Binv
        reduced = c - A.T @ y
        reduced[basis] = 0.0
        eligible = np.flatnonzero(reduced < -opt_tol)
        if eligible.size == 0:
            if since:  # final answer from a fresh factorization
                B = A[:, basis]
                return np.linalg.solve(B, b), np.linalg.solve(B.T, c[basis])
            return x_b, y
        budget.tick()
        q = int(eligible[0])
        w = Binv @ A[:, q]
        rows = np.flatnonzero(w > PIVOT_TOL)
        if rows.size == 0:
            raise Unbounded(f"column {q} gives an unbounded ray")
        ratios = np.maximum(x_b[rows], 0.0) / w[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 * max(1.0, best)]
        r = int(tied[np.argmin(basis[tied])])
        basis[r] = q
        since += 1
        if since % REFACTOR_EVERY == 0:
            Binv = np.linalg.inv(A[:, basis])
        else:
            pivot_row = Binv[r] / w[r]
            Binv -= np.outer(w, pivot_row)
            Binv[r] = pivot_row


def solve_standard_form(c, A, b, max_iter=None, opt_tol=OPT_TOL, feas_tol=FEAS_TOL):
    """Solve ``min c^T x`` subject to ``A x = b``, ``x >= 0``.

    ``A`` must have full row rank.  Returns an optimal basic solution and
    the multipliers ``y`` with ``c - A^T y >= -opt_tol`` componentwise.
    """
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n, K = A.shape
    if max_iter is None:
        max_iter = 50 * (K + n)
    budget = _Budget(max_iter)

    # rows are flipped so that the artificial start x_art = |b| is feasible
    flip = np.where(b < 0, -1.0, 1.0)
    A *= flip[:, None]
    b *= flip

    A1 = np.hstack([A, np.eye(n)])
    c1 = np.concatenate([np.zeros(K), np.ones(n)])
    basis = np.arange(K, K + n)
    x_b, _ = _iterate(A1, b, c1, basis, budget, opt_tol)
    infeas = float(np.sum(x_b[basis >= K]))
    if infeas > feas_tol * (1.0 + np.abs(b).sum()):
        raise Infeasible(f"phase 1 ended with infeasibility {infeas:.3e}")

    # drive remaining (zero-level) artificials out of the basis
    for r in range(n):
        if basis[r] < K:
            continue
        B = A1[:, basis]
        row = np.linalg.solve(B.T, np.eye(n)[r]) @ A
        row[basis[basis < K]] = 0.0
        mag = np.abs(row)
        if mag.max(initial=0.0) <= PIVOT_TOL:
            raise RankDeficient("constraint matrix does not have full row rank")
        basis[r] = int(np.argmax(mag))

    x_b, y = _iterate(A, b, c, basis, budget, opt_tol)
    x = np.zeros(K)
    x[basis] = np.maximum(x_b, 0.0)
    y = y * flip
    return SimplexResult(x=x, y=y, basis=basis.copy(), objective=float(c @ x),
                         iterations=budget.used)
