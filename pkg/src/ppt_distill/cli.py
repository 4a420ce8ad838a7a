"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from typing import Any

import numpy as np

from . import __version__
from . import bounds as bd
from . import codes as cd
from . import fidelity as fd
from . import operators as op
from . import symmetry as sy
from .solver import SolverError

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3
TOL_RANGE = (1e-10, 1e-3)
ENV_TOL = "PPT_DISTILL_TOL"
DEFAULT_CLI_TOL = 1e-6

PROVENANCE = {
    "fidelity": "primal SDP max Tr(F rho), 0<=F<=1, -1/K<=F^Gamma<=1/K; dual min Tr(rho-D)_+ + Tr|D^Gamma|/K",
    "isotropic-lp": "symmetry-reduced LP for isotropic tensor powers (U x conj(U) and S_n invariance)",
    "werner-lp": "symmetry-reduced LP for Werner tensor powers (U x U and S_n invariance)",
    "code-lp": "weight-enumerator LP: S_C, B_C, A_C, B_C - A_C/K >= 0 with Shor-Laflamme normalization and distance",
    "closed-isotropic": "closed form for isotropic states: 1/K, 1/K + (fd-1)/(d-1)(1-1/K), fd/K",
    "closed-werner1": "closed form for the antisymmetric Werner state: min(1, (d+2)/(dK))",
    "closed-maxent": "closed form for maximally entangled states: min(1, d/K)",
}


class InputError(Exception):
    pass


def _num(x: Any) -> Any:
    """Round floats to 12 significant digits for output."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in x]
    return x


def _emit(payload: Any, fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(_num(payload), indent=2) + "\n")
        return
    rows = payload if isinstance(payload, list) else [payload]
    rows = [_num(r) for r in rows]
    fields: list[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})


def _load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _load_alpha(path: str) -> np.ndarray:
    data = _load_json(path)
    try:
        if isinstance(data, dict):
            re = np.array(data["re"], dtype=float)
            im = np.array(data.get("im", np.zeros_like(re)), dtype=float)
            return re + 1j * im
        return np.array(data, dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: alpha must be a matrix or {{'re': ..., 'im': ...}}") from exc


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise InputError(f"family {args.family!r} needs --{' --'.join(missing)}")


def _state_from_args(args) -> tuple[op.DensityMatrix, str | None, dict]:
    if args.state:
        return op.state_from_dict(_load_json(args.state)), None, {}
    if not args.family:
        raise InputError("give --state FILE or --family")
    fam = args.family
    if fam == "isotropic":
        _need(args, "d", "f")
        return op.isotropic_state(args.d, args.f), fam, {"d": args.d, "f": args.f}
    if fam == "werner":
        _need(args, "d", "p")
        return op.werner_state(args.d, args.p), fam, {"d": args.d, "p": args.p}
    if fam == "maxent":
        _need(args, "d")
        return op.max_entangled(args.d), fam, {"d": args.d}
    if fam == "max-correlated":
        _need(args, "alpha")
        alpha = _load_alpha(args.alpha)
        return op.max_correlated_state(alpha), fam, {"alpha": alpha}
    raise InputError(f"unknown family {fam!r}")


def _closed_form(family: str | None, params: dict, K: float):
    if family == "isotropic":
        return fd.fidelity_isotropic_closed(params["d"], params["f"], K), PROVENANCE["closed-isotropic"]
    if family == "maxent":
        return fd.fidelity_maxent_closed(params["d"], K), PROVENANCE["closed-maxent"]
    if family == "werner" and params["p"] == 1.0:
        return fd.fidelity_werner1_closed(params["d"], K), PROVENANCE["closed-werner1"]
    return None, None


# subcommands -------------------------------------------------------------

def cmd_fidelity(args, tol):
    rho, family, params = _state_from_args(args)
    res = fd.fidelity_ppt(rho, args.K, tol=tol)
    lo, hi = fd.sandwich(rho, args.K)
    out = {
        "command": "fidelity",
        "value": res.value,
        "K": args.K,
        "gap": res.gap,
        "dual_value": res.dual_value,
        "dual_bound": fd.dual_bound(rho, args.K, res.dual_D),
        "sandwich": [lo, hi],
        "dims": list(rho.shape.dims),
        "provenance": PROVENANCE["fidelity"],
    }
    if family:
        out["family"] = family
        out.update({k: v for k, v in params.items() if k != "alpha"})
        closed, prov = _closed_form(family, params, args.K)
        if closed is not None:
            out["closed_form"] = closed
            out["closed_form_provenance"] = prov
    return out


def cmd_power_lp(args, tol, family):
    if family == "isotropic":
        res = sy.isotropic_power_lp(args.d, args.f, args.n, args.K, tol=tol)
        par = {"f": args.f}
    else:
        res = sy.werner_power_lp(args.d, args.p, args.n, args.K, tol=tol)
        par = {"p": args.p}
    return {
        "command": f"{family}-lp",
        "value": res.value,
        "d": args.d, **par, "n": args.n, "K": args.K,
        "B": list(res.B.coeffs),
        "S": list(res.S.coeffs),
        "coefficient_order": "index l multiplies x^(n-l) y^l",
        "provenance": PROVENANCE[f"{family}-lp"],
    }


def cmd_bounds(args, tol):
    rho, family, params = _state_from_args(args)
    reports = bd.state_bounds(rho, family, params)
    rows = [{"name": r.name, "kind": r.kind, "value": r.value, "provenance": r.provenance} for r in reports]
    if args.format == "json":
        return {"command": "bounds", "bounds": rows, "ordering_ok": bd.check_ordering(reports)}
    return rows


def _verdict_row(v: cd.CodeLpVerdict) -> dict:
    p = v.params
    return {"n": p.n, "K": p.K_dim, "d": p.d_min, "alphabet": p.k_alphabet, "verdict": v.verdict,
            "feasible": v.feasible, "margin": v.margin, "verified": v.verified}


def cmd_code_lp(args, tol):
    params = cd.CodeParams(args.n, args.K, args.d, args.alphabet)
    v = cd.code_lp_feasible(params)
    out = {"command": "code-lp", **_verdict_row(v), "raw_margin": v.raw_margin,
           "provenance": PROVENANCE["code-lp"]}
    if v.feasible and v.point is not None:
        ens = cd.enumerator_transforms(v.A_prime, params.k_alphabet)
        out["A_prime"] = list(v.A_prime.coeffs)
        out["A"] = list(ens.A_poly.coeffs)
        out["B"] = list(ens.B_poly.coeffs)
        out["S"] = list(ens.S_poly.coeffs)
        out["implicit_equalities"] = v.implicit_rows
    elif v.certificate is not None:
        out["certificate"] = {
            "z": list(v.certificate["z"]),
            "y": list(v.certificate["y"]),
            "rows": cd.code_lp_system(params).labels,
            "meaning": "z >= 0, G^T z + E^T y = 0, e.y < 0 (variables: A_C coefficients)",
        }
    return out


def cmd_code_table(args, tol):
    table = cd.code_lp_table(args.n_max, args.alphabet)
    rows = [dict(_verdict_row(v), provenance=PROVENANCE["code-lp"]) for v in table]
    if args.format == "json":
        return {"command": "code-table", "cells": rows, "distance_monotone": cd.distance_monotone(table)}
    return rows


# parser -------------------------------------------------------------------

def _state_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--state", help="JSON file {'dims': [dA, dB], 're': [[...]], 'im': [[...]]}")
    p.add_argument("--family", choices=["isotropic", "werner", "maxent", "max-correlated"])
    p.add_argument("--d", type=int, help="local dimension")
    p.add_argument("--f", type=float, help="isotropic fidelity")
    p.add_argument("--p", type=float, help="Werner antisymmetric weight")
    p.add_argument("--alpha", help="JSON file with the correlation matrix alpha")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppt-distill", description="Fidelity and bounds for p.p.t. distillation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--tol", type=float, help=f"solver tolerance in [1e-10, 1e-3] (env {ENV_TOL})")
    parser.add_argument("--format", choices=["json", "csv"], default=None)
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default=argparse.SUPPRESS)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fidelity", parents=[common], help="F_Gamma(rho; K) by semidefinite programming")
    _state_args(p)
    p.add_argument("--K", type=float, required=True)

    for name, param in (("isotropic-lp", "f"), ("werner-lp", "p")):
        p = sub.add_parser(name, parents=[common], help=f"LP for {name.split('-')[0]} tensor powers")
        p.add_argument("--d", type=int, required=True)
        p.add_argument(f"--{param}", type=float, required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--K", type=float, required=True)

    p = sub.add_parser("bounds", parents=[common], help="upper/lower bounds on p.p.t. distillable entanglement")
    _state_args(p)

    p = sub.add_parser("code-lp", parents=[common], help="enumerator LP feasibility for ((n, K, d))")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--alphabet", type=int, default=2)

    p = sub.add_parser("code-table", parents=[common], help="enumerator LP verdicts over a parameter grid")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--alphabet", type=int, default=2)
    return parser


def _resolve_tol(args) -> float:
    tol = args.tol
    if tol is None:
        env = os.environ.get(ENV_TOL)
        if env:
            try:
                tol = float(env)
            except ValueError as exc:
                raise InputError(f"{ENV_TOL}={env!r} is not a number") from exc
    if tol is None:
        return DEFAULT_CLI_TOL
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise InputError(f"tolerance {tol:g} outside [{TOL_RANGE[0]:g}, {TOL_RANGE[1]:g}]")
    return tol


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, stream=err,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.format is None:
        args.format = "csv" if args.command == "code-table" else "json"
    handlers = {
        "fidelity": cmd_fidelity,
        "isotropic-lp": lambda a, t: cmd_power_lp(a, t, "isotropic"),
        "werner-lp": lambda a, t: cmd_power_lp(a, t, "werner"),
        "bounds": cmd_bounds,
        "code-lp": cmd_code_lp,
        "code-table": cmd_code_table,
    }
    try:
        tol = _resolve_tol(args)
        payload = handlers[args.command](args, tol)
    except SolverError as exc:
        err.write(f"error: solver failure: {exc}\n")
        return EXIT_SOLVER
    except (InputError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    buf = io.StringIO()
    _emit(payload, args.format, buf)
    out.write(buf.getvalue())
    return EXIT_OK


def main() -> None:
    sys.exit(run())
