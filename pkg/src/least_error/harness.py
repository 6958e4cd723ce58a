"""Convergence-rate and stability experiments.

Every study reports the worst slack of the inequality it exercises rather
than asserting it, so callers (and the acceptance suite) decide what to do
with a violation.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import LeastErrorError, LevelTooSmall, NumericallySingular
from .kappa import kappa_auto, kappa_vertex_enum
from .l1solver import solve_least_error
from .model import DiscretizationFamily, ProblemInstance, bregman, bregman_sym
from .problems import with_noise
from .rules import choose_n_apriori, run_discrepancy, run_monotone_error
from .source import check_source_condition, discrete_source_element, strictify_source

CSV_FIELDS = ("delta", "seed", "rule", "n", "err_l1", "bregman", "residual", "kappa_n", "ratio")
STABILITY_SLACK = 1e-6


def fit_loglog_slope(points) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two (x, y) pairs")
    if np.any(pts <= 0):
        raise ValueError("log-log fit needs positive values")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(lx) == 0:
        raise ValueError("all x values coincide; slope undefined")
    lx = lx - lx.mean()
    return float(lx @ (ly - ly.mean()) / (lx @ lx))


@dataclass
class RuleConfig:
    rule: str = "fixed"  # fixed | apriori | me | dp
    n: Optional[int] = None
    theta: float = 1.0
    tau: float = 2.0
    n_max: Optional[int] = None

    def __post_init__(self):
        if self.rule not in ("fixed", "apriori", "me", "dp"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.rule == "fixed" and self.n is None:
            raise ValueError("the fixed rule needs a level n")


class _KappaCache:
    def __init__(self, inst, fam, restarts=50, seed=0):
        self.inst, self.fam = inst, fam
        self.restarts, self.seed = restarts, seed
        self.values = {}

    def __call__(self, n):
        if n not in self.values:
            self.values[n] = kappa_auto(self.inst, self.fam, n, restarts=self.restarts, seed=self.seed)
        return self.values[n]

    def upto(self, n_max):
        return [self(n) for n in range(1, n_max + 1)]

    @property
    def certified(self):
        return all(k.certified for k in self.values.values())


def _column_lower_bound(cols):
    """``c`` with ``||x||_1 <= c ||cols @ x||`` for all ``x``."""
    if cols.shape[1] == 0:
        return 0.0
    s = np.linalg.svd(cols, compute_uv=False)
    return float(np.sqrt(cols.shape[1]) / s[-1])


def fixed_level_bound(inst, fam, n, kappa_n, margin_n, delta):
    """Explicit form of ``||u^n - u_true||_1 <= C delta kappa_n`` at a level with a discrete source element.

    The off-support mass is at most ``2 delta kappa_n / margin_n`` (Bregman
    distance vs. symmetric Bregman stability); the on-support error is
    controlled through the smallest singular value of the projected support
    columns.
    """
    supp = list(np.flatnonzero(inst.u_true))
    off = 2.0 * delta * kappa_n / margin_n
    c = _column_lower_bound(fam.sub(n).T @ inst.astar[:, supp])
    return off + c * (delta + inst.op_norm * off)


def discrepancy_bound(inst, cert, kappa_n, delta, tau):
    """Explicit error bound at any level whose residual is at most ``tau * delta``.

    Uses a strict source element ``cert`` in H (not restricted to ``H_n``).
    """
    supp = list(cert.support)
    vn = float(np.linalg.norm(cert.v))
    off = (kappa_n + (tau + 1.0) * vn) * delta / cert.margin
    c = _column_lower_bound(inst.astar[:, supp])
    return off + c * ((tau + 1.0) * delta + inst.op_norm * off)


@dataclass
class RateRow:
    delta: float
    seed: int
    rule: str
    n: Optional[int] = None
    err_l1: Optional[float] = None
    bregman: Optional[float] = None
    residual: Optional[float] = None
    kappa_n: Optional[float] = None
    ratio: Optional[float] = None
    l1_norm: Optional[float] = None
    norm_slack: Optional[float] = None  # ||u^n||_1 - delta kappa_n - ||u_true||_1
    bound: Optional[float] = None
    terminated: bool = True
    error: Optional[str] = None


@dataclass
class RateTable:
    rows: list
    label: str
    kappa_certified: bool
    margin: Optional[float] = None
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_FIELDS])
        return buf.getvalue()


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _select(noisy, fam, config, kappas):
    if config.rule == "fixed":
        return solve_least_error(noisy, fam, config.n), True
    n_max = fam.n_max if config.n_max is None else config.n_max
    if config.rule == "apriori":
        out = choose_n_apriori(kappas.upto(n_max), noisy.delta, config.theta)
        return solve_least_error(noisy, fam, out.n_selected), True
    if config.rule == "me":
        out = run_monotone_error(noisy, fam, n_max=n_max)
    else:
        out = run_discrepancy(noisy, fam, tau=config.tau, n_max=n_max)
    return out.result, out.terminated


def rate_study(inst: ProblemInstance, fam: DiscretizationFamily, deltas: Sequence[float],
               config: RuleConfig, seeds: Sequence[int] = (0,), kappa_restarts: int = 50) -> RateTable:
    """Reconstruct from noisy data over a grid of noise levels.

    Noise for seed ``s`` is ``delta * e_s`` with a direction ``e_s`` that depends
    on ``s`` only, so each seed traces a ray towards the exact data.  The
    summary holds the log-log slope of the per-delta median error, the
    largest observed ``err / (delta kappa_n)`` and the worst slack of the
    norm bound ``||u^n||_1 <= delta kappa_n + ||u_true||_1``.
    """
    if inst.u_true is None or inst.f is None:
        raise ValueError("rate study needs f and u_true")
    kappas = _KappaCache(inst, fam, restarts=kappa_restarts)
    u_true = inst.u_true
    true_norm = float(np.abs(u_true).sum())

    cert = check_source_condition(inst)
    label = "no-source"
    if cert is not None:
        try:
            cert = strictify_source(inst, None, cert)
            label = "source"
        except NumericallySingular:
            label = "source-nonstrict"
    strict = label == "source" and cert.margin > 0

    fixed_margin = None
    if strict and config.rule == "fixed":
        try:
            fixed_margin = discrete_source_element(inst, fam, config.n, None, cert).margin
        except LevelTooSmall:
            fixed_margin = None

    rows = []
    for delta in deltas:
        for seed in seeds:
            row = RateRow(delta=float(delta), seed=int(seed), rule=config.rule)
            try:
                noisy = with_noise(inst, float(delta), int(seed))
                res, terminated = _select(noisy, fam, config, kappas)
                k = kappas(res.n).value
                row.n, row.terminated = res.n, terminated
                row.err_l1 = float(np.abs(res.u - u_true).sum())
                row.bregman = bregman(u_true, res.l1_norm, res.xi)
                row.residual = res.residual
                row.kappa_n = k
                row.ratio = row.err_l1 / (delta * k) if delta > 0 else None
                row.l1_norm = res.l1_norm
                row.norm_slack = res.l1_norm - delta * k - true_norm
                if config.rule == "fixed" and fixed_margin is not None:
                    row.bound = fixed_level_bound(inst, fam, res.n, k, fixed_margin, delta)
                elif config.rule == "dp" and strict and terminated:
                    row.bound = discrepancy_bound(inst, cert, k, delta, config.tau)
            except LeastErrorError as exc:
                row.error = f"{exc.code}: {exc}"
            rows.append(row)

    table = RateTable(rows=rows, label=label, kappa_certified=kappas.certified,
                      margin=None if cert is None else cert.margin)
    table.summary = _summarize(table, config)
    return table


def _summarize(table, config):
    ok = [r for r in table.rows if r.error is None]
    by_delta = {}
    for r in ok:
        by_delta.setdefault(r.delta, []).append(r)
    medians = {d: float(np.median([r.err_l1 for r in rs])) for d, rs in by_delta.items()}
    med_ratio = {d: float(np.median([r.ratio for r in rs])) for d, rs in by_delta.items()
                 if all(r.ratio is not None for r in rs)}
    pts = [(d, e) for d, e in sorted(medians.items()) if d > 0 and e > 0]
    slope = fit_loglog_slope(pts) if len({p[0] for p in pts}) >= 2 else None
    ratios = [r.ratio for r in ok if r.ratio is not None]
    bounded = [r for r in ok if r.bound is not None]
    return {
        "rule": config.rule,
        "label": table.label,
        "kappa_certified": table.kappa_certified,
        "source_margin": table.margin,
        "slope": slope,
        "empirical_constant": max(ratios) if ratios else None,
        "median_ratio_by_delta": {repr(d): v for d, v in sorted(med_ratio.items())},
        "median_err_by_delta": {repr(d): v for d, v in sorted(medians.items())},
        "max_norm_bound_slack": max((r.norm_slack for r in ok), default=None),
        "bound_checked": len(bounded),
        "max_bound_excess": max((r.err_l1 - r.bound for r in bounded), default=None),
        "max_bound_ratio": max((r.err_l1 / r.bound for r in bounded if r.bound > 0), default=None),
        "failed_cells": len(table.rows) - len(ok),
        "not_terminated": sum(1 for r in ok if not r.terminated),
    }


@dataclass
class StabilityRow:
    trial: int
    data_gap: float
    dsym: float
    norm_diff: float
    bound: float


@dataclass
class StabilityTable:
    n: int
    kappa_n: float
    kappa_certified: bool
    rows: list
    worst_dsym_ratio: float = 0.0
    worst_norm_ratio: float = 0.0
    max_dsym_excess: float = -np.inf
    max_norm_excess: float = -np.inf

    @property
    def holds(self) -> bool:
        return self.max_dsym_excess <= STABILITY_SLACK and self.max_norm_excess <= STABILITY_SLACK

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("rows")
        d["holds"] = self.holds
        d["trials"] = len(self.rows)
        return d


def stability_study(inst: ProblemInstance, fam: DiscretizationFamily, n: int, trials: int = 50,
                    seed: int = 0, kappa=None) -> StabilityTable:
    """Check the two stability estimates on random data pairs.

    For solutions ``u1, u2`` at level ``n`` from data ``f1, f2``:
    ``D_sym(u1, u2) <= 2 kappa_n ||f1 - f2||`` and
    ``| ||u1||_1 - ||u2||_1 | <= 2 kappa_n ||f1 - f2||``.
    Pairs are drawn around ``inst.f_delta`` with gaps spread over three decades.
    ``kappa`` defaults to the exact vertex-enumeration value.
    """
    if kappa is None:
        kappa = kappa_vertex_enum(inst, fam, n)
    k = float(getattr(kappa, "value", kappa))
    certified = bool(getattr(kappa, "certified", False))
    rng = np.random.default_rng(seed)
    base = inst.f_delta
    scale = 1.0 + np.linalg.norm(base)
    table = StabilityTable(n=n, kappa_n=k, kappa_certified=certified, rows=[])
    for t in range(trials):
        f1 = base + scale * rng.uniform(0, 1) * rng.standard_normal(inst.m) / np.sqrt(inst.m)
        gap = scale * 10.0 ** rng.uniform(-3, 0)
        g = rng.standard_normal(inst.m)
        f2 = f1 + gap * g / np.linalg.norm(g)
        r1 = solve_least_error(inst, fam, n, rhs=f1)
        r2 = solve_least_error(inst, fam, n, rhs=f2)
        dsym = bregman_sym(r1.u, r1.xi, r2.u, r2.xi)
        ndiff = abs(r1.l1_norm - r2.l1_norm)
        bound = 2.0 * k * float(np.linalg.norm(f1 - f2))
        table.rows.append(StabilityRow(t, float(np.linalg.norm(f1 - f2)), dsym, ndiff, bound))
        table.max_dsym_excess = max(table.max_dsym_excess, dsym - bound)
        table.max_norm_excess = max(table.max_norm_excess, ndiff - bound)
        if bound > 0:
            table.worst_dsym_ratio = max(table.worst_dsym_ratio, dsym / bound)
            table.worst_norm_ratio = max(table.worst_norm_ratio, ndiff / bound)
    return table
