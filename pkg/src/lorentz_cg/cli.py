"""Command-line interface: ``lorentz-cg <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or domain error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import acceptance, elliptic as ell, solver, surface, wdata
from .errors import DomainError, LorentzCGError, NumericError

SUBCOMMANDS = ("periods", "weber-root", "rho", "verify-cg", "deform", "jacobian",
               "inequality", "solve", "trace", "case2-scan", "mesh", "selfint",
               "symmetry", "report")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real) + 0.0, float(obj.imag) + 0.0]
    if isinstance(obj, (np.floating, float)):
        return float(obj) + 0.0
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _parse_lambda(text: str) -> complex:
    parts = text.split(",")
    if len(parts) > 2:
        raise argparse.ArgumentTypeError("expected RE or RE,IM")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return complex(vals[0], vals[1] if len(vals) == 2 else 0.0)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lorentz-cg", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--lambda", dest="lam", type=_parse_lambda, default=None,
                   help="modulus lambda as RE or RE,IM (default -1)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--grid", type=int, default=None, help="grid size (default 64; 20 for case2-scan)")
    p.add_argument("--theta", type=float, default=None, help="deformation angle, zeta = exp(i theta)")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--step-size", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--format", choices=("json", "csv", "obj"), default="json")
    return p


def _validate(args):
    if not 1e-14 < args.tol < 1e-2:
        raise UsageError("--tol must lie in (1e-14, 1e-2)")
    if args.grid is not None and not 16 <= args.grid <= 2048:
        raise UsageError("--grid must lie in [16, 2048]")
    if args.steps < 1:
        raise UsageError("--steps must be positive")
    if not 0 < args.step_size <= 0.05:
        raise UsageError("--step-size must lie in (0, 0.05]")
    if args.format != "json" and args.subcommand != "mesh":
        raise UsageError("csv/obj output is only available for mesh")


def _zeta(args) -> complex:
    th = math.pi / 4 if args.theta is None else args.theta
    return complex(math.cos(th), math.sin(th))


def _cmd_periods(args):
    lam = -1 + 0j if args.lam is None else args.lam
    ps = ell.periods(lam, min(args.tol, 1e-13))
    out = ps.to_dict()
    out["legendre_residual"] = ell.legendre_residual(ps)
    out["tau"] = ps.tau
    return dumps(out)


def _cmd_weber(args):
    lam0 = -1 + 0j if args.lam is None else args.lam
    root = ell.weber_root(lam0, args.tol)
    return dumps({"start": lam0, "root": root, "residual": abs(ell.weber_residual(root))})


def _cmd_rho(args):
    g, p = wdata.cg_rho()
    return dumps({"rho_gamma": g, "rho_period": p, "rho4": g ** 4})


def _cmd_verify_cg(args):
    v = solver.ParamVector.vstar()
    d = wdata.case1_data(v.to_params())
    J = solver.jacobian(v, "analytic-at-vstar")
    return dumps({"v": v.to_json(), "period_residual_inf": float(np.max(np.abs(solver.period_map(v)))),
                  "regularity_margin": wdata.regularity_margin(d, args.grid or 64),
                  "loop_residual_inf": float(np.max(np.abs(surface.loop_residuals(d)))),
                  "sigma8_over_sigma1": J.rank_ratio})


def _cmd_deform(args):
    d = wdata.lorentz_deform(wdata.CGBase.classical(), _zeta(args))
    return dumps({"data": d.to_json(),
                  "regularity_margin": wdata.regularity_margin(d, args.grid or 64),
                  "loop_residual_inf": float(np.max(np.abs(surface.loop_residuals(d))))})


def _cmd_jacobian(args):
    v = solver.ParamVector.vstar()
    Ja = solver.jacobian(v, "analytic-at-vstar")
    Jf = solver.jacobian(v, "finite-difference")
    return dumps({"analytic": Ja.matrix, "singular_values": Ja.singular_values,
                  "sigma8_over_sigma1": Ja.rank_ratio,
                  "max_difference_vs_finite_difference": float(np.max(np.abs(Ja.matrix - Jf.matrix))),
                  "kernel": Ja.kernel()})


def _cmd_inequality(args):
    return dumps(solver.inequality_check().to_json())


def _cmd_solve(args):
    rng = np.random.default_rng(args.seed)
    v = solver.ParamVector.vstar()
    u = rng.normal(size=12)
    arr = v.array + args.step_size * u / np.linalg.norm(u)
    if args.lam is not None:
        arr[10], arr[11] = args.lam.real, args.lam.imag
    v0 = solver.ParamVector(arr)
    root = solver.correct(v0, tol=min(args.tol, 1e-9), basin=1.0)
    p = root.to_params()
    return dumps({"start": v0.to_json(), "root": root.to_json(),
                  "residual_inf": float(np.max(np.abs(solver.period_map(root)))),
                  "regularity_margin": wdata.regularity_margin(wdata.case1_data(p), args.grid or 32),
                  "phipsi_variance": solver.phipsi_variance(p)})


def _cmd_trace(args):
    nodes = solver.trace_family(args.steps, args.step_size, margin_grid=args.grid or 32)
    return solver.trace_to_jsonl(nodes)


def _cmd_case2(args):
    return dumps(solver.case2_scan(args.grid or 20))


def _cmd_mesh(args):
    if args.theta is None:
        d = wdata.case1_data(wdata.Case1Params.vstar())
    else:
        d = wdata.lorentz_deform(wdata.CGBase.classical(), _zeta(args))
    m = surface.sample_mesh(d, args.grid or 64)
    if args.format == "json":
        return dumps({"z": m.z, "X": m.X, "faces": m.faces, "puncture_radius": m.puncture_radius,
                      "signature": list(m.signature)})
    return surface.export_mesh(m, args.format)


def _cmd_selfint(args):
    th = math.pi / 4 if args.theta is None else args.theta
    pts = surface.find_self_intersections(th, n=args.grid or 64)
    return dumps({"theta": th, "count": len(pts), "points": [p.to_json() for p in pts]})


def _cmd_symmetry(args):
    if args.theta is None:
        d = wdata.case1_data(wdata.Case1Params.vstar())
    else:
        d = wdata.lorentz_deform(wdata.CGBase.classical(), _zeta(args))
    return dumps(surface.symmetry_check(d, args.grid or 32))


def _cmd_report(args):
    results = acceptance.run_all()
    for r in results:
        print(r.line(), file=sys.stderr)
    return dumps({"criteria": [r.to_json() for r in results],
                  "all_passed": all(r.passed and r.within_budget for r in results)})


HANDLERS = {"periods": _cmd_periods, "weber-root": _cmd_weber, "rho": _cmd_rho,
            "verify-cg": _cmd_verify_cg, "deform": _cmd_deform, "jacobian": _cmd_jacobian,
            "inequality": _cmd_inequality, "solve": _cmd_solve, "trace": _cmd_trace,
            "case2-scan": _cmd_case2, "mesh": _cmd_mesh, "selfint": _cmd_selfint,
            "symmetry": _cmd_symmetry, "report": _cmd_report}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        text = HANDLERS[args.subcommand](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except LorentzCGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"cannot write {args.out}: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
