"""JSON documents for problems, reconstructions and source certificates.

Floats are written with ``repr``, i.e. the shortest decimal string that
reads back to the identical double.
"""
from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .model import DiscretizationFamily, ProblemInstance, ReconstructionResult, SourceCertificate


def _list(a):
    return None if a is None else np.asarray(a, dtype=float).tolist()


def problem_to_dict(inst: ProblemInstance, fam: DiscretizationFamily) -> dict:
    return {
        "m": inst.m,
        "N": inst.N,
        "astar": _list(inst.astar),
        "f": _list(inst.f),
        "f_delta": _list(inst.f_delta),
        "delta": inst.delta,
        "u_true": _list(inst.u_true),
        "basis": _list(fam.basis),
        "n_max": fam.n_max,
    }


def problem_from_dict(d: dict):
    astar = np.array(d["astar"], dtype=float)
    if astar.shape != (d["m"], d["N"]):
        raise ValueError(f"astar has shape {astar.shape}, header says ({d['m']}, {d['N']})")
    inst = ProblemInstance(
        astar=astar,
        f_delta=np.array(d["f_delta"], dtype=float),
        delta=float(d.get("delta", 0.0)),
        f=None if d.get("f") is None else np.array(d["f"], dtype=float),
        u_true=None if d.get("u_true") is None else np.array(d["u_true"], dtype=float),
    )
    basis = np.array(d["basis"], dtype=float)
    fam = DiscretizationFamily(basis)
    if "n_max" in d and d["n_max"] != fam.n_max:
        raise ValueError(f"basis has {fam.n_max} columns, header says n_max={d['n_max']}")
    return inst, fam


def result_to_dict(res: ReconstructionResult) -> dict:
    return {
        "n": res.n,
        "u": _list(res.u),
        "v": _list(res.v),
        "xi": _list(res.xi),
        "l1_norm": res.l1_norm,
        "residual": res.residual,
        "support": list(res.support),
        "diagnostics": None if res.diagnostics is None else asdict(res.diagnostics),
    }


def certificate_to_dict(cert: SourceCertificate) -> dict:
    return {"v": _list(cert.v), "support": list(cert.support), "margin": cert.margin}


def load_problem(path):
    with open(path) as fh:
        return problem_from_dict(json.load(fh))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_default)


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
