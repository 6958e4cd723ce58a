"""The least error problem  min ||u||_1  s.t.  P_n A* u = P_n rhs.

Written in basis coordinates the constraints read ``M u = b`` with
``M = Q_n^T astar`` and ``b = Q_n^T rhs``.  Splitting ``u = u+ - u-`` gives a
standard-form LP; its equality multipliers ``p`` are the coordinates of the
source element ``v^n = Q_n p`` and ``xi^n = A v^n = M^T p``.
"""
from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np
from scipy.optimize import linprog

from .exceptions import Infeasible, SizeLimitExceeded
from .model import (
    DiscretizationFamily,
    LpDiagnostics,
    ProblemInstance,
    ReconstructionResult,
    check_kernel,
    level_matrix,
    support_of,
)
from .simplex import solve_standard_form

BRUTE_MAX_N = 12
BRUTE_MAX_LEVEL = 5


def _rhs(inst, rhs):
    if rhs is None:
        return inst.f_delta
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (inst.m,):
        raise ValueError(f"rhs must have length {inst.m}, got shape {rhs.shape}")
    return rhs


def _assemble(inst, fam, n, u, p, rhs, iterations=0):
    q = fam.sub(n)
    v_h = q @ p
    xi = inst.astar.T @ v_h
    res = ReconstructionResult(
        n=n,
        u=u,
        v=p,
        v_h=v_h,
        xi=xi,
        l1_norm=float(np.abs(u).sum()),
        residual=float(np.linalg.norm(inst.astar @ u - inst.f_delta)),
        support=support_of(u),
        rhs=rhs,
    )
    res.diagnostics = verify_certificate(inst, fam, res)
    res.diagnostics.iterations = iterations
    return res


def solve_least_error(inst: ProblemInstance, fam: DiscretizationFamily, n: int,
                      rhs=None) -> ReconstructionResult:
    """Basic optimal solution of the least error problem at level ``n``.

    Parameters
    ----------
    inst, fam : problem and nested discretization
    n : int
        Discretization level, ``1 <= n <= fam.n_max``.
    rhs : array, optional
        Right-hand side in H; defaults to ``inst.f_delta``.

    Returns
    -------
    ReconstructionResult
        ``u`` has at most ``n`` nonzeros; ``xi`` lies in the l1
        subdifferential at ``u``.  The minimizer need not be unique; the fixed
        pivot rule selects one deterministically.
    """
    n = fam.check_level(n)
    rhs = _rhs(inst, rhs)
    check_kernel(inst, fam, n)
    M = level_matrix(inst, fam, n)
    b = fam.sub(n).T @ rhs
    N = inst.N
    lp = solve_standard_form(np.ones(2 * N), np.hstack([M, -M]), b)
    u = lp.x[:N] - lp.x[N:]
    return _assemble(inst, fam, n, u, lp.y, rhs, lp.iterations)


def verify_certificate(inst: ProblemInstance, fam: DiscretizationFamily,
                       result: ReconstructionResult) -> LpDiagnostics:
    """Recompute feasibility, dual feasibility and complementarity of ``result``.

    Violations are reported, not raised.
    """
    n = result.n
    rhs = inst.f_delta if result.rhs is None else result.rhs
    q = fam.sub(n)
    u = np.asarray(result.u, dtype=float)
    xi = np.asarray(result.xi, dtype=float)
    primal = float(np.linalg.norm(q.T @ (inst.astar @ u - rhs)))
    dual = max(0.0, float(np.max(np.abs(xi), initial=0.0)) - 1.0)
    compl = float(np.sum(np.maximum(0.0, np.abs(u) * (1.0 - xi * np.sign(u)))))
    return LpDiagnostics(iterations=0, objective=float(np.abs(u).sum()),
                         primal_feas=primal, dual_feas=dual, complementarity=compl)


def _dual_multipliers(M, b):
    """max b^T p  s.t.  ||M^T p||_inf <= 1, solved independently of the simplex."""
    n, N = M.shape
    out = linprog(-b, A_ub=np.vstack([M.T, -M.T]), b_ub=np.ones(2 * N),
                  bounds=[(None, None)] * n, method="highs")
    if out.status != 0:
        raise Infeasible(f"dual LP failed: {out.message}")
    return out.x


def brute_force_solve(inst: ProblemInstance, fam: DiscretizationFamily, n: int,
                      rhs=None) -> ReconstructionResult:
    """Global minimizer by enumerating every support of size at most ``n``.

    Some optimal solution is basic, i.e. supported on at most ``n`` linearly
    independent columns, so the smallest l1 norm among exactly solvable
    supports is the optimum.
    """
    n = fam.check_level(n)
    if inst.N > BRUTE_MAX_N or n > BRUTE_MAX_LEVEL:
        raise SizeLimitExceeded(
            f"brute force limited to N <= {BRUTE_MAX_N}, n <= {BRUTE_MAX_LEVEL} "
            f"(got N={inst.N}, n={n}, {sum(comb(inst.N, k) for k in range(n + 1))} supports)")
    rhs = _rhs(inst, rhs)
    check_kernel(inst, fam, n)
    M = level_matrix(inst, fam, n)
    b = fam.sub(n).T @ rhs
    scale = 1.0 + np.linalg.norm(b)

    best_u = np.zeros(inst.N)
    best = 0.0 if np.linalg.norm(b) <= 1e-12 * scale else np.inf
    for size in range(1, n + 1):
        if best == 0.0:
            break
        for cols in combinations(range(inst.N), size):
            sub = M[:, cols]
            if np.linalg.matrix_rank(sub, tol=1e-10) < size:
                continue
            coef = np.linalg.lstsq(sub, b, rcond=None)[0]
            if np.linalg.norm(sub @ coef - b) > 1e-9 * scale:
                continue
            val = np.abs(coef).sum()
            if val < best - 1e-12:
                best = val
                best_u = np.zeros(inst.N)
                best_u[list(cols)] = coef
    if not np.isfinite(best):
        raise Infeasible("no support of size <= n reproduces the data")
    return _assemble(inst, fam, n, best_u, _dual_multipliers(M, b), rhs)
