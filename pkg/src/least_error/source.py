"""Source elements for sparse solutions.

A source element ``v`` for ``u_true`` satisfies ``||Av||_inf <= 1`` and
``(Av)_i = sign(u_true_i)`` on the support.  It is *strict* when
``|(Av)_i| < 1`` off the support, measured by the margin
``1 - max_{i not in supp} |(Av)_i|``.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .exceptions import LevelTooSmall, MissingExactData, NumericallySingular, SizeLimitExceeded
from .kappa import VERTEX_MAX_LEVEL
from .l1solver import solve_least_error
from .model import (
    DiscretizationFamily,
    ProblemInstance,
    SourceCertificate,
    level_matrix,
    support_of,
)

ACTIVE_TOL = 1e-9
GRAM_RTOL = 1e-8
_HIGHS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _u_true(inst, u_true):
    u = inst.u_true if u_true is None else np.asarray(u_true, dtype=float)
    if u is None:
        raise MissingExactData("no true solution given")
    if u.shape != (inst.N,):
        raise ValueError(f"u_true must have length {inst.N}")
    return u


def margin(inst: ProblemInstance, v, support) -> float:
    """``1 - max_{i not in support} |(Av)_i|``; 1 when every index is in the support."""
    av = inst.astar.T @ np.asarray(v, dtype=float)
    off = np.ones(inst.N, dtype=bool)
    off[list(support)] = False
    return float(1.0 - np.max(np.abs(av[off]), initial=0.0))


def _well_conditioned(G):
    s = np.linalg.svd(G, compute_uv=False)
    return s.size == 0 or (s[0] > 0 and s[-1] >= GRAM_RTOL * s[0])


def _min_norm_correction(rows, target, v):
    """Smallest ``dv`` with ``rows @ (v + dv) = target``."""
    if rows.shape[0] == 0:
        return v
    return v + np.linalg.lstsq(rows, target - rows @ v, rcond=None)[0]


def check_source_condition(inst: ProblemInstance, u_true=None) -> Optional[SourceCertificate]:
    """Source element of largest margin, or None if none exists.

    Solves ``max t`` over ``(v, t)`` subject to ``(Av)_i = sign(u_i)`` on the
    support, ``|(Av)_i| + t <= 1`` off it and ``t <= 1``.  The returned
    margin may be zero, in which case the certificate is valid but not strict.
    """
    u = _u_true(inst, u_true)
    supp = support_of(u)
    m, N = inst.m, inst.N
    on = np.zeros(N, dtype=bool)
    on[list(supp)] = True
    a_on, a_off = inst.astar[:, on].T, inst.astar[:, ~on].T
    signs = np.sign(u[on])

    n_off = a_off.shape[0]
    A_ub = np.vstack([np.hstack([a_off, np.ones((n_off, 1))]),
                      np.hstack([-a_off, np.ones((n_off, 1))])]) if n_off else None
    b_ub = np.ones(2 * n_off) if n_off else None
    A_eq = np.hstack([a_on, np.zeros((a_on.shape[0], 1))]) if len(supp) else None
    b_eq = signs if len(supp) else None
    c = np.zeros(m + 1)
    c[-1] = -1.0
    out = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(None, None)] * m + [(None, 1.0)], method="highs", options=_HIGHS)
    if out.status != 0 or out.x[-1] < -ACTIVE_TOL:
        return None
    v = _min_norm_correction(a_on, signs, out.x[:m])
    if len(supp) and np.max(np.abs(a_on @ v - signs)) > ACTIVE_TOL:
        return None
    mg = margin(inst, v, supp)
    if mg < -ACTIVE_TOL:
        return None
    return SourceCertificate(v=v, support=supp, margin=mg)


def strictify_source(inst: ProblemInstance, u_true, cert: SourceCertificate) -> SourceCertificate:
    """Make the active set ``{i : |(Av)_i| = 1}`` coincide with the support.

    Off-support indices ``I0`` where ``|(Av)_i| = 1`` are pulled inward by
    adding ``v_I`` from the span of the active columns, with
    ``(A v_I)_i = -eps * sign((Av)_i)`` on ``I0`` and 0 on the rest of the active set.
    ``eps`` is half the admissible bound ``min(1, rho / (2 C ||A||))`` with
    ``rho`` the gap of the inactive indices and ``C`` a bound on the solution
    operator of the active Gram system.
    """
    u = _u_true(inst, u_true)
    supp = set(support_of(u))
    av = inst.astar.T @ cert.v
    active = np.flatnonzero(np.abs(av) >= 1 - ACTIVE_TOL)
    I0 = [i for i in active if i not in supp]
    if not I0:
        return SourceCertificate(v=cert.v, support=tuple(sorted(supp)),
                                 margin=margin(inst, cert.v, supp),
                                 extra={"eps": 0.0})
    rows = inst.astar[:, active].T
    G = rows @ rows.T
    if not _well_conditioned(G):
        raise NumericallySingular(f"Gram matrix of the {active.size} active columns is singular")
    solution_op = rows.T @ np.linalg.inv(G)  # vbar -> v_I
    C = np.linalg.norm(solution_op, 2) * np.sqrt(active.size)  # >= sup ||v_I|| / ||vbar||_inf
    inactive = np.setdiff1d(np.arange(inst.N), active)
    rho = 1.0 - np.max(np.abs(av[inactive]), initial=0.0)
    eps = 0.5 * min(1.0, 0.5 * rho / (C * inst.op_norm))
    vbar = np.zeros(active.size)
    pos = np.isin(active, I0)
    vbar[pos] = -eps * np.sign(av[active[pos]])
    v_new = cert.v + solution_op @ vbar
    mg = margin(inst, v_new, supp)
    av_new = inst.astar.T @ v_new
    now_active = set(np.flatnonzero(np.abs(av_new) >= 1 - ACTIVE_TOL).tolist())
    if mg <= 0 or now_active != supp:
        raise NumericallySingular("correction did not produce a strict source element")
    return SourceCertificate(v=v_new, support=tuple(sorted(supp)), margin=mg,
                             extra={"eps": float(eps), "rho": float(rho), "C": float(C)})


def discrete_source_element(inst: ProblemInstance, fam: DiscretizationFamily, n: int,
                            u_true, cert_strict: SourceCertificate) -> SourceCertificate:
    """Source element in ``H_n`` built from a strict one.

    ``v^n = P_n v + w`` where ``w`` lies in ``P_n span{a_i : i in supp}`` and
    restores ``<v^n, a_i> = <v, a_i>`` on the support.  Raises
    :class:`LevelTooSmall` if the projected Gram system is singular or the
    margin falls below half the strict margin.
    """
    n = fam.check_level(n)
    u = _u_true(inst, u_true)
    supp = list(support_of(u))
    q = fam.sub(n)
    pv = q @ (q.T @ cert_strict.v)
    if supp:
        a_i = inst.astar[:, supp]
        pa = q @ (q.T @ a_i)
        G = a_i.T @ pa
        if not _well_conditioned(G):
            raise LevelTooSmall(f"A_I P_n A_I* is singular at n={n}")
        r = a_i.T @ (cert_strict.v - pv)
        v_n = pv + pa @ np.linalg.solve(G, r)
        if np.max(np.abs(a_i.T @ v_n - np.sign(u[supp]))) > ACTIVE_TOL:
            raise LevelTooSmall(f"sign pattern not reproduced at n={n}")
    else:
        v_n = pv
    mg = margin(inst, v_n, supp)
    if mg < 0.5 * cert_strict.margin - 1e-9:
        raise LevelTooSmall(f"margin {mg:.3e} below half of {cert_strict.margin:.3e} at n={n}")
    return SourceCertificate(v=v_n, support=tuple(supp), margin=mg, extra={"n": n})


def find_n0(inst: ProblemInstance, fam: DiscretizationFamily, cert_strict: SourceCertificate,
            u_true=None, tol: float = 1e-7):
    """Smallest level where a discrete source element exists and exact data recover ``u_true``.

    Returns ``(n0, certificate)`` or ``(None, None)``.
    """
    u = _u_true(inst, u_true)
    if inst.f is None:
        raise MissingExactData("find_n0 needs exact data")
    for n in range(1, fam.n_max + 1):
        try:
            cert_n = discrete_source_element(inst, fam, n, u, cert_strict)
        except LevelTooSmall:
            continue
        res = solve_least_error(inst, fam, n, rhs=inst.f)
        if np.abs(res.u - u).sum() <= tol:
            return n, cert_n
    return None, None


def extremal_index_set(inst: ProblemInstance, fam: DiscretizationFamily, n: int) -> tuple:
    """Indices ``i`` whose projected column ``±P_n a_i`` is a vertex of the symmetric hull.

    A point is a vertex iff it is not a convex combination of the remaining
    points; copies of the same point (up to sign) are not counted as
    "remaining".
    """
    n = fam.check_level(n)
    if n > VERTEX_MAX_LEVEL:
        raise SizeLimitExceeded(f"extremal index set limited to n <= {VERTEX_MAX_LEVEL}")
    P = level_matrix(inst, fam, n)  # columns are projected a_i in basis coordinates
    scale = max(np.abs(P).max(), 1e-300)
    pts = np.hstack([P, -P])
    out = []
    for i in range(inst.N):
        p = P[:, i]
        if np.linalg.norm(p) <= 1e-12 * scale:
            continue
        same = np.max(np.abs(pts - p[:, None]), axis=0) <= 1e-12 * scale
        dup = same[: inst.N] | same[inst.N:]
        keep = ~np.concatenate([dup, dup])
        others = pts[:, keep]
        if others.shape[1] == 0:
            out.append(i)
            continue
        k = others.shape[1]
        res = linprog(np.zeros(k), A_eq=np.vstack([others, np.ones((1, k))]),
                      b_eq=np.concatenate([p, [1.0]]), bounds=[(0, None)] * k,
                      method="highs", options=_HIGHS)
        if res.status == 2:
            out.append(i)
    return tuple(out)
