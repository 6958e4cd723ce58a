"""Choice of the discretization level: a priori, monotone error rule, discrepancy principle."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import EmptySelection, MissingExactData
from .l1solver import solve_least_error
from .model import DiscretizationFamily, ProblemInstance, bregman

V_EQUAL_TOL = 1e-10
#: d_ME values this far below delta are needed to trigger; guards against round-off
ME_TRIGGER_TOL = 1e-10


@dataclass
class TraceRecord:
    n: int
    l1_norm: Optional[float] = None
    residual: Optional[float] = None
    d_me: Optional[float] = None
    kappa: Optional[float] = None
    d_me_identity: Optional[float] = None
    bregman_err: Optional[float] = None
    c1_diag: Optional[float] = None


@dataclass
class RuleOutcome:
    rule: str
    n_selected: int
    trace: list
    terminated: bool
    results: dict = field(default_factory=dict, repr=False)

    @property
    def result(self):
        return self.results.get(self.n_selected)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "l1_norm", "residual", "d_me", "kappa"])
        for r in self.trace:
            w.writerow([r.n] + ["" if x is None else repr(float(x))
                                for x in (r.l1_norm, r.residual, r.d_me, r.kappa)])
        return buf.getvalue()


def _kappa_values(kappas):
    if kappas is None:
        return None
    return [float(getattr(k, "value", k)) for k in kappas]


def _kappa_at(kvals, n):
    if kvals is None or n > len(kvals):
        return None
    return kvals[n - 1]


def choose_n_apriori(kappas: Sequence, delta: float, theta: float = 1.0) -> RuleOutcome:
    """Largest level with ``delta * kappa_n <= theta``.

    For fixed ``theta`` the selected level grows without bound as ``delta -> 0``
    while ``delta * kappa_n`` stays bounded by ``theta``.
    """
    kvals = _kappa_values(kappas)
    if not kvals:
        raise ValueError("need at least one kappa value")
    if delta < 0 or theta <= 0:
        raise ValueError("need delta >= 0 and theta > 0")
    if np.any(np.diff(kvals) < -1e-9):
        raise ValueError("kappa values must be nondecreasing")
    trace = [TraceRecord(n=i + 1, kappa=k) for i, k in enumerate(kvals)]
    admissible = [i + 1 for i, k in enumerate(kvals) if delta * k <= theta]
    if not admissible:
        raise EmptySelection(f"delta*kappa_1 = {delta * kvals[0]:.6g} exceeds theta = {theta}")
    return RuleOutcome(rule="apriori", n_selected=max(admissible), trace=trace, terminated=True)


def run_apriori(inst: ProblemInstance, fam: DiscretizationFamily, kappas: Sequence,
                delta: Optional[float] = None, theta: float = 1.0) -> RuleOutcome:
    """A priori choice followed by a solve at the chosen level."""
    delta = inst.delta if delta is None else delta
    out = choose_n_apriori(kappas, delta, theta)
    res = solve_least_error(inst, fam, out.n_selected)
    rec = out.trace[out.n_selected - 1]
    rec.l1_norm, rec.residual = res.l1_norm, res.residual
    out.results[out.n_selected] = res
    return out


def _levels(fam, n_max):
    return fam.n_max if n_max is None else fam.check_level(n_max)


def run_monotone_error(inst: ProblemInstance, fam: DiscretizationFamily,
                       delta: Optional[float] = None, n_max: Optional[int] = None,
                       kappas: Optional[Sequence] = None, scan_all: bool = False) -> RuleOutcome:
    """Monotone error rule: stop at the first ``n`` with ``v^{n+1} != v^n`` and ``d_ME(n) < delta``.

    ``d_ME(n) = <v^{n+1} - v^n, f_delta> / ||v^{n+1} - v^n||``.  The trace also
    records the same quantity computed as
    ``(||u^{n+1}||_1 - ||u^n||_1) / ||v^{n+1} - v^n||`` and, when the true
    solution is known, the Bregman error ``D(u_true, u^n)`` w.r.t. ``xi^n``.

    If no level triggers, ``terminated`` is False and ``n_selected = n_max``.
    With ``scan_all`` the trace continues past the stopping index.
    """
    delta = inst.delta if delta is None else float(delta)
    n_max = _levels(fam, n_max)
    kvals = _kappa_values(kappas)
    results, trace = {}, []

    def level(n):
        if n not in results:
            res = solve_least_error(inst, fam, n)
            results[n] = res
            rec = TraceRecord(n=n, l1_norm=res.l1_norm, residual=res.residual,
                              kappa=_kappa_at(kvals, n))
            if inst.u_true is not None:
                rec.bregman_err = bregman(inst.u_true, res.l1_norm, res.xi)
            trace.append(rec)
        return results[n]

    selected, terminated = n_max, False
    for n in range(1, n_max):
        cur, nxt = level(n), level(n + 1)
        dv = nxt.v_h - cur.v_h
        dv_norm = float(np.linalg.norm(dv))
        rec = trace[n - 1]
        if dv_norm <= V_EQUAL_TOL * (1.0 + np.linalg.norm(cur.v_h)):
            rec.d_me = rec.d_me_identity = 0.0
            continue
        rec.d_me = float(dv @ inst.f_delta) / dv_norm
        rec.d_me_identity = (nxt.l1_norm - cur.l1_norm) / dv_norm
        if not terminated and rec.d_me < delta - ME_TRIGGER_TOL:
            selected, terminated = n, True
            if not scan_all:
                break
    if n_max == 1:
        level(1)
    return RuleOutcome(rule="monotone_error", n_selected=selected, trace=trace,
                       terminated=terminated, results=results)


def c1_diagnostic(inst: ProblemInstance, fam: DiscretizationFamily, n: int, kappa_n: float) -> float:
    """``kappa_n * ||(id - P_n) A*||`` with the l1 -> H operator norm (largest column norm)."""
    q = fam.sub(n)
    tail = inst.astar - q @ (q.T @ inst.astar)
    return float(kappa_n * np.max(np.linalg.norm(tail, axis=0)))


def run_discrepancy(inst: ProblemInstance, fam: DiscretizationFamily,
                    delta: Optional[float] = None, tau: float = 2.0,
                    n_max: Optional[int] = None,
                    kappas: Optional[Sequence] = None) -> RuleOutcome:
    """Discrepancy principle: first ``n`` with ``||A* u^n - f_delta|| <= tau * delta``.

    If no level qualifies, ``terminated`` is False and ``n_selected = n_max``.
    """
    delta = inst.delta if delta is None else float(delta)
    if tau <= 1:
        raise ValueError("tau must exceed 1")
    if delta <= 0:
        raise ValueError("the discrepancy principle needs delta > 0")
    n_max = _levels(fam, n_max)
    kvals = _kappa_values(kappas)
    results, trace = {}, []
    selected, terminated = n_max, False
    for n in range(1, n_max + 1):
        res = solve_least_error(inst, fam, n)
        results[n] = res
        k = _kappa_at(kvals, n)
        rec = TraceRecord(n=n, l1_norm=res.l1_norm, residual=res.residual, kappa=k)
        if k is not None:
            rec.c1_diag = c1_diagnostic(inst, fam, n, k)
        if inst.u_true is not None:
            rec.bregman_err = bregman(inst.u_true, res.l1_norm, res.xi)
        trace.append(rec)
        if res.residual <= tau * delta:
            selected, terminated = n, True
            break
    return RuleOutcome(rule="discrepancy", n_selected=selected, trace=trace,
                       terminated=terminated, results=results)


def gamma_hat(inst: ProblemInstance, fam: DiscretizationFamily, n: int) -> float:
    """``||(id - P_n) A* (u^{true,n} - u_true)||`` with ``u^{true,n}`` the exact-data solution."""
    if inst.f is None or inst.u_true is None:
        raise MissingExactData("gamma_hat needs exact data f and u_true")
    res = solve_least_error(inst, fam, n, rhs=inst.f)
    w = inst.astar @ (res.u - inst.u_true)
    q = fam.sub(n)
    return float(np.linalg.norm(w - q @ (q.T @ w)))
