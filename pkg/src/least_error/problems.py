"""Synthetic problems with known ground truth, and noise injection."""
from __future__ import annotations

import dataclasses

import numpy as np

from .exceptions import RankDeficient
from .model import DiscretizationFamily, ProblemInstance, check_kernel


def make_denoising(N: int, f):
    """Embedding of l1 into l2 with the canonical basis.

    The least error solution at level ``n`` keeps the first ``n`` entries of
    the data and zeroes the rest.
    """
    f = np.asarray(f, dtype=float)
    if N < 1 or f.shape != (N,):
        raise ValueError(f"f must have length N={N}")
    inst = ProblemInstance(astar=np.eye(N), f_delta=f.copy(), delta=0.0, f=f.copy(), u_true=f.copy())
    return inst, DiscretizationFamily.canonical(N)


def _random_orthogonal(rng, m):
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    return q * np.sign(np.diag(r))


def make_singular_basis(sigmas, N=None, u_true=None, seed=0, orthonormal=True):
    """Compact operator given through its singular system.

    The l1 variable is the coefficient sequence with respect to the right
    singular vectors, so ``astar = V diag(sigma)`` and ``H_n`` is spanned by
    the first ``n`` left singular vectors ``V[:, :n]``.  With
    ``orthonormal=False`` the singular vectors are the canonical basis and
    ``astar = diag(sigma)``.

    ``u_true`` defaults to the first unit sequence.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    m = sigmas.size
    if N is not None and N != m:
        raise ValueError(f"singular-basis instances have N = len(sigmas) = {m}")
    if m == 0 or np.any(sigmas <= 0):
        raise ValueError("singular values must be strictly positive")
    if np.any(np.diff(sigmas) > 0):
        raise ValueError("singular values must be nonincreasing")
    V = _random_orthogonal(np.random.default_rng(seed), m) if orthonormal else np.eye(m)
    astar = V * sigmas
    if u_true is None:
        u_true = np.zeros(m)
        u_true[0] = 1.0
    u_true = np.asarray(u_true, dtype=float)
    f = astar @ u_true
    inst = ProblemInstance(astar=astar, f_delta=f.copy(), delta=0.0, f=f, u_true=u_true)
    return inst, DiscretizationFamily(V)


def make_random_sparse(m: int, N: int, k: int, seed: int = 0, max_retries: int = 20):
    """Gaussian operator with unit columns and a ``k``-sparse solution.

    The discretization uses the left singular vectors of ``astar`` ordered by
    decreasing singular value.  Nonzero entries of ``u_true`` have random
    signs and magnitudes in [1, 2].
    """
    if not 0 <= k <= m <= N:
        raise ValueError(f"need 0 <= k <= m <= N, got k={k}, m={m}, N={N}")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        astar = rng.standard_normal((m, N))
        astar /= np.linalg.norm(astar, axis=0)
        u_true = np.zeros(N)
        idx = np.sort(rng.choice(N, size=k, replace=False))
        u_true[idx] = rng.choice([-1.0, 1.0], size=k) * rng.uniform(1.0, 2.0, size=k)
        U = np.linalg.svd(astar, full_matrices=False)[0]
        f = astar @ u_true
        inst = ProblemInstance(astar=astar, f_delta=f.copy(), delta=0.0, f=f, u_true=u_true)
        fam = DiscretizationFamily(U)
        try:
            for n in range(1, m + 1):
                check_kernel(inst, fam, n)
        except RankDeficient:
            continue
        return inst, fam
    raise RankDeficient(f"no full-rank draw in {max_retries} attempts")


def add_noise(f, delta: float, seed: int = 0) -> np.ndarray:
    """``f + delta * e`` with ``e`` uniform on the unit sphere."""
    f = np.asarray(f, dtype=float)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta == 0:
        return f.copy()
    e = np.random.default_rng(seed).standard_normal(f.size)
    return f + delta * (e / np.linalg.norm(e))


def with_noise(inst: ProblemInstance, delta: float, seed: int = 0) -> ProblemInstance:
    """Copy of ``inst`` whose data are ``f`` perturbed at exact level ``delta``."""
    if inst.f is None:
        raise ValueError("instance has no exact data to perturb")
    return dataclasses.replace(inst, f_delta=add_noise(inst.f, delta, seed), delta=delta)
