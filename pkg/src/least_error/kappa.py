"""Stability constant kappa_n = sup_{z in H_n} ||z|| / ||A z||_inf.

Equivalently kappa_n is the largest Euclidean norm over the symmetric
polytope ``{c in R^n : |B c| <= 1}`` with ``B = A Q_n`` (an ``N x n`` matrix).
A convex function attains its maximum over a polytope at a vertex, so for
small ``n`` the value is computed exactly by enumerating vertices.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, islice, product
from math import comb
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .exceptions import SizeLimitExceeded, UnboundedPolytope
from .model import DiscretizationFamily, ProblemInstance, level_matrix

VERTEX_MAX_LEVEL = 6
VERTEX_MAX_SUBSETS = 2_000_000
_CHUNK = 2048
_FEAS_TOL = 1e-9


@dataclass
class KappaEstimate:
    n: int
    value: float
    method: str
    certified: bool
    argmax: Optional[np.ndarray] = None


def _polytope_rows(inst, fam, n):
    B = level_matrix(inst, fam, n).T
    if np.linalg.matrix_rank(B, tol=1e-10 * max(np.abs(B).max(), 1e-300)) < n:
        raise UnboundedPolytope(f"{{|Az|_inf <= 1}} is unbounded in H_{n}: kernel condition fails")
    return B


def kappa_vertex_enum(inst: ProblemInstance, fam: DiscretizationFamily, n: int) -> KappaEstimate:
    """Exact kappa_n by enumerating the vertices of ``{c : |B c|_inf <= 1}``.

    Each vertex solves ``B_S c = s`` for ``n`` linearly independent rows ``S``
    and a sign vector ``s``; the polytope is symmetric, so ``s_0 = +1`` is
    enough.
    """
    n = fam.check_level(n)
    if n > VERTEX_MAX_LEVEL:
        raise SizeLimitExceeded(f"vertex enumeration limited to n <= {VERTEX_MAX_LEVEL}")
    N = inst.N
    if comb(N, n) > VERTEX_MAX_SUBSETS:
        raise SizeLimitExceeded(f"C({N},{n}) = {comb(N, n)} active sets exceed the enumeration budget")
    B = _polytope_rows(inst, fam, n)
    signs = np.array([(1.0,) + s for s in product((1.0, -1.0), repeat=n - 1)]).T  # (n, S)

    best, arg = 0.0, None
    subsets = combinations(range(N), n)
    while True:
        chunk = list(islice(subsets, _CHUNK))
        if not chunk:
            break
        blocks = B[np.array(chunk)]  # (k, n, n)
        sv = np.linalg.svd(blocks, compute_uv=False)
        blocks = blocks[sv[:, -1] > 1e-10 * sv[:, 0]]
        if blocks.shape[0] == 0:
            continue
        Z = np.linalg.solve(blocks, np.broadcast_to(signs, (blocks.shape[0],) + signs.shape))
        feasible = np.max(np.abs(np.einsum("in,kns->kis", B, Z)), axis=1) <= 1 + _FEAS_TOL
        norms = np.where(feasible, np.linalg.norm(Z, axis=1), -1.0)
        k, s = np.unravel_index(np.argmax(norms), norms.shape)
        if norms[k, s] > best:
            best, arg = float(norms[k, s]), Z[k, :, s].copy()
    if arg is None:
        raise UnboundedPolytope("no vertex found")
    return KappaEstimate(n=n, value=best, method="vertex_enum", certified=True,
                         argmax=fam.sub(n) @ arg)


def kappa_diagonal(sigmas, n: int) -> KappaEstimate:
    """Closed form ``sqrt(sum_{i<=n} sigma_i^-2)`` for the singular basis."""
    sigmas = np.asarray(sigmas, dtype=float)
    n = int(n)
    if not 1 <= n <= sigmas.size:
        raise ValueError(f"level n={n} outside 1..{sigmas.size}")
    if np.any(sigmas[:n] <= 0):
        raise ValueError("singular values must be positive")
    value = float(np.sqrt(np.sum(sigmas[:n] ** -2.0)))
    return KappaEstimate(n=n, value=value, method="diagonal_closed_form", certified=True)


def _linear_max(B, direction):
    """argmax <direction, c> over |B c| <= 1, rescaled to be exactly feasible."""
    N = B.shape[0]
    out = linprog(-direction, A_ub=np.vstack([B, -B]), b_ub=np.ones(2 * N),
                  bounds=[(None, None)] * B.shape[1], method="highs")
    c = out.x
    return c / max(1.0, np.max(np.abs(B @ c)))


def kappa_lower_bound(inst: ProblemInstance, fam: DiscretizationFamily, n: int,
                      restarts: int = 50, seed: int = 0, max_steps: int = 100) -> KappaEstimate:
    """Multistart ascent of ``||c||^2`` over the polytope; a feasible-point lower bound.

    From a random linear objective's maximizing vertex, repeatedly jump to the
    vertex maximizing the linearization ``<c_k, c>``.  Each step cannot
    decrease ``||c||`` and every iterate is feasible.
    """
    n = fam.check_level(n)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    B = _polytope_rows(inst, fam, n)
    rng = np.random.default_rng(seed)
    best, arg = 0.0, None
    for _ in range(restarts):
        c = _linear_max(B, rng.standard_normal(n))
        val = np.linalg.norm(c)
        for _ in range(max_steps):
            nxt = _linear_max(B, c)
            nval = np.linalg.norm(nxt)
            if nval <= val * (1 + 1e-13):
                break
            c, val = nxt, nval
        if val > best:
            best, arg = float(val), c
    return KappaEstimate(n=n, value=best, method="multistart_lower_bound", certified=False,
                         argmax=fam.sub(n) @ arg)


def kappa_auto(inst: ProblemInstance, fam: DiscretizationFamily, n: int,
               restarts: int = 50, seed: int = 0) -> KappaEstimate:
    """Exact value when enumeration is affordable, lower bound otherwise."""
    n = fam.check_level(n)
    if n <= VERTEX_MAX_LEVEL and comb(inst.N, n) <= VERTEX_MAX_SUBSETS // 8:
        return kappa_vertex_enum(inst, fam, n)
    return kappa_lower_bound(inst, fam, n, restarts=restarts, seed=seed)


def kappa_table(inst: ProblemInstance, fam: DiscretizationFamily, n_max: Optional[int] = None,
                restarts: int = 50, seed: int = 0) -> list:
    n_max = fam.n_max if n_max is None else fam.check_level(n_max)
    return [kappa_auto(inst, fam, n, restarts=restarts, seed=seed) for n in range(1, n_max + 1)]
