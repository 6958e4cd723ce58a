"""Core data types, operator application, projections and Bregman distances.

The infinite-dimensional setting is truncated to dense matrices: ``H`` is
``R^m`` with the Euclidean inner product and the sequence space is ``R^N``
with the l1 norm.  The operator ``A*`` is stored column-wise as ``astar``
(column ``i`` is ``A* e_i``), so ``A z = astar.T @ z``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import InvalidSubgradient, RankDeficient

#: relative threshold below which an entry of ``u`` counts as zero
SUPPORT_TOL = 1e-9
#: tolerance for subgradient / certificate checks
SUBGRADIENT_TOL = 1e-7
ORTHONORMAL_TOL = 1e-10
RANK_TOL = 1e-10


def _frozen(a, ndim=1, name="array"):
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProblemInstance:
    """Truncated operator equation ``A* u = f`` with observed data ``f_delta``.

    Parameters
    ----------
    astar : (m, N) array
        Column ``i`` is ``a_i = A* e_i``.
    f_delta : (m,) array
        Observed data.
    delta : float
        Noise bound ``||f_delta - f|| <= delta``.
    f : (m,) array, optional
        Exact data.
    u_true : (N,) array, optional
        Known (sparse) solution.
    """

    astar: np.ndarray
    f_delta: np.ndarray
    delta: float = 0.0
    f: Optional[np.ndarray] = None
    u_true: Optional[np.ndarray] = None

    def __post_init__(self):
        astar = _frozen(self.astar, 2, "astar")
        object.__setattr__(self, "astar", astar)
        object.__setattr__(self, "f_delta", _frozen(self.f_delta, 1, "f_delta"))
        if self.f is not None:
            object.__setattr__(self, "f", _frozen(self.f, 1, "f"))
        if self.u_true is not None:
            object.__setattr__(self, "u_true", _frozen(self.u_true, 1, "u_true"))
        object.__setattr__(self, "delta", float(self.delta))
        self.validate()

    @property
    def m(self) -> int:
        return self.astar.shape[0]

    @property
    def N(self) -> int:
        return self.astar.shape[1]

    def validate(self):
        m, N = self.astar.shape
        if m < 1 or N < 1:
            raise ValueError("astar must have positive dimensions")
        if self.f_delta.shape != (m,):
            raise ValueError(f"f_delta has length {self.f_delta.size}, expected {m}")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if np.any(np.all(self.astar == 0.0, axis=0)):
            raise ValueError("astar has an identically zero column")
        if self.f is not None:
            if self.f.shape != (m,):
                raise ValueError(f"f has length {self.f.size}, expected {m}")
            if np.linalg.norm(self.f_delta - self.f) > self.delta * (1 + 1e-12) + 1e-300:
                raise ValueError("||f_delta - f|| exceeds delta")
        if self.u_true is not None:
            if self.u_true.shape != (N,):
                raise ValueError(f"u_true has length {self.u_true.size}, expected {N}")
            if self.f is not None:
                mismatch = np.linalg.norm(self.astar @ self.u_true - self.f)
                if mismatch > 1e-10 * (1 + np.linalg.norm(self.f)):
                    raise ValueError("astar @ u_true does not reproduce f")

    @property
    def op_norm(self) -> float:
        """Norm of ``A*`` as a map l1 -> H, i.e. the largest column norm.

        It coincides with the norm of ``A`` as a map H -> l∞.
        """
        return float(np.max(np.linalg.norm(self.astar, axis=0)))


@dataclass(frozen=True)
class DiscretizationFamily:
    """Nested subspaces ``H_n = span(basis[:, :n])`` for ``n = 1..n_max``."""

    basis: np.ndarray

    def __post_init__(self):
        basis = _frozen(self.basis, 2, "basis")
        object.__setattr__(self, "basis", basis)
        m, n_max = basis.shape
        if n_max < 1 or n_max > m:
            raise ValueError(f"need 1 <= n_max <= m, got n_max={n_max}, m={m}")
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(n_max))) > ORTHONORMAL_TOL:
            raise ValueError("basis columns are not orthonormal")

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    @property
    def n_max(self) -> int:
        return self.basis.shape[1]

    def check_level(self, n: int) -> int:
        n = int(n)
        if not 1 <= n <= self.n_max:
            raise ValueError(f"level n={n} outside 1..{self.n_max}")
        return n

    def sub(self, n: int) -> np.ndarray:
        """The ``m x n`` matrix spanning ``H_n``."""
        return self.basis[:, : self.check_level(n)]

    @classmethod
    def canonical(cls, m: int, n_max: Optional[int] = None) -> "DiscretizationFamily":
        return cls(np.eye(m)[:, : (m if n_max is None else n_max)])


@dataclass
class LpDiagnostics:
    iterations: int
    objective: float
    primal_feas: float
    dual_feas: float
    complementarity: float

    def within_bounds(self) -> bool:
        return (
            self.primal_feas <= 1e-8
            and self.dual_feas <= SUBGRADIENT_TOL
            and self.complementarity <= SUBGRADIENT_TOL
        )


@dataclass
class ReconstructionResult:
    """Minimizer ``u^n`` together with its dual source element.

    ``v`` holds coefficients in the ``H_n`` basis; ``v_h`` is the same element
    as a vector of ``H``; ``xi = A v_h`` is the l1 subgradient certificate.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    v_h: np.ndarray
    xi: np.ndarray
    l1_norm: float
    residual: float
    support: tuple
    rhs: Optional[np.ndarray] = None
    diagnostics: Optional[LpDiagnostics] = None


@dataclass(frozen=True)
class SourceCertificate:
    """Source element ``v`` in H for a solution supported on ``support``.

    ``margin`` is ``1 - max_{i not in support} |(Av)_i|``.
    """

    v: np.ndarray
    support: tuple
    margin: float
    extra: dict = field(default_factory=dict, compare=False)


def level_matrix(inst: ProblemInstance, fam: DiscretizationFamily, n: int) -> np.ndarray:
    """``n x N`` matrix with rows ``(A col_j)^T``; ``P_n A* u`` in basis coordinates."""
    if fam.m != inst.m:
        raise ValueError(f"family lives in R^{fam.m}, instance in R^{inst.m}")
    return fam.sub(n).T @ inst.astar


def check_kernel(inst: ProblemInstance, fam: DiscretizationFamily, n: int) -> None:
    """Raise :class:`RankDeficient` unless N(A) ∩ H_n = {0}."""
    s = np.linalg.svd(level_matrix(inst, fam, n), compute_uv=False)
    if s.size < n or s[-1] <= RANK_TOL * max(s[0], 1e-300):
        smin = s[-1] if s.size else 0.0
        raise RankDeficient(f"level matrix at n={n} is rank deficient (smallest singular value {smin:.3e})")


def apply_forward(inst: ProblemInstance, z) -> np.ndarray:
    """``(A z)_i = <a_i, z>``."""
    z = np.asarray(z, dtype=float)
    if z.shape != (inst.m,):
        raise ValueError(f"expected an H-vector of length {inst.m}, got shape {z.shape}")
    return inst.astar.T @ z


def apply_adjoint(inst: ProblemInstance, u) -> np.ndarray:
    """``A* u = sum_i u_i a_i``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (inst.N,):
        raise ValueError(f"expected a sequence of length {inst.N}, got shape {u.shape}")
    return inst.astar @ u


def project(fam: DiscretizationFamily, n: int, w) -> np.ndarray:
    """Orthogonal projection of ``w`` onto ``H_n``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (fam.m,):
        raise ValueError(f"expected an H-vector of length {fam.m}, got shape {w.shape}")
    q = fam.sub(n)
    return q @ (q.T @ w)


def support_of(u, tol: float = SUPPORT_TOL) -> tuple:
    u = np.asarray(u, dtype=float)
    thresh = tol * (1.0 + np.abs(u).sum())
    return tuple(int(i) for i in np.flatnonzero(np.abs(u) > thresh))


def subgradient_membership(u, xi, tol: float = SUBGRADIENT_TOL) -> bool:
    """Whether ``xi`` lies in the l1 subdifferential at ``u``."""
    u = np.asarray(u, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if u.shape != xi.shape:
        raise ValueError("u and xi must have equal lengths")
    if xi.size and np.max(np.abs(xi)) > 1 + tol:
        return False
    active = np.abs(u) > tol
    return bool(np.all(xi[active] * np.sign(u[active]) >= 1 - tol))


def bregman(u, v_norm: float, xi) -> float:
    """Bregman distance ``D(u, v) = ||u||_1 - <xi_v, u>`` for ``xi_v`` in ∂||.||_1(v).

    ``v_norm`` (``||v||_1``) does not enter the simplified formula; it is
    accepted so call sites record which base point ``xi`` belongs to.
    """
    u = np.asarray(u, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if u.shape != xi.shape:
        raise ValueError("u and xi must have equal lengths")
    if xi.size and np.max(np.abs(xi)) > 1 + 1e-9:
        raise InvalidSubgradient(f"||xi||_inf = {np.max(np.abs(xi)):.12g} > 1")
    # nonnegative when ||xi||_inf <= 1; negative values are cancellation error
    return max(0.0, float(np.abs(u).sum() - xi @ u))


def bregman_sym(u, xi_u, w, xi_w, tol: float = SUBGRADIENT_TOL) -> float:
    """Symmetric Bregman distance ``<xi_u - xi_w, u - w>``."""
    u, xi_u, w, xi_w = (np.asarray(a, dtype=float) for a in (u, xi_u, w, xi_w))
    if not subgradient_membership(u, xi_u, tol):
        raise InvalidSubgradient("xi_u is not a subgradient at u")
    if not subgradient_membership(w, xi_w, tol):
        raise InvalidSubgradient("xi_w is not a subgradient at w")
    return float((xi_u - xi_w) @ (u - w))


def residual_norm(inst: ProblemInstance, u, rhs: Optional[Sequence[float]] = None) -> float:
    rhs = inst.f_delta if rhs is None else np.asarray(rhs, dtype=float)
    return float(np.linalg.norm(inst.astar @ np.asarray(u, dtype=float) - rhs))
