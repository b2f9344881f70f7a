"""Command-line entry point: ``pepsynth <command> [options]``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .certificates import nonsmooth_certificate, smooth_certificate
from .classes import BoundedSubgradient, SmoothStronglyConvex
from .experiments import PipelineError, figure1, figure1_csv, parse_kappa, table1, table1_csv
from .pep import OPTIMAL, build_fixed_step_pep, build_gfom_pep
from .runners import methods as M
from .runners.oracles import from_dict as oracle_from_dict
from .sdp import DualCertificate, SolverOptions, extract_certificate, solve, verify_certificate
from .synthesis import CanonicalForm, FactoredForm, factorize, synthesize_steps, to_canonical


class CommandFailed(Exception):
    def __init__(self, message: str, payload=None):
        super().__init__(message)
        self.payload = payload


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _function_class(args):
    if args.cls == "nonsmooth":
        return BoundedSubgradient(args.M)
    return SmoothStronglyConvex(args.mu, args.L)


def _options(args) -> SolverOptions:
    return SolverOptions(gap_tol=args.gap_tol, feas_tol=args.feas_tol)


def _require_N(args, minimum=0):
    if args.N is None or args.N < minimum:
        raise ValueError(f"--N must be given and >= {minimum}")
    return args.N


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed JSON ({exc})") from exc


# ---------------------------------------------------------------------------


def cmd_certify(args):
    N = _require_N(args)
    if args.cls == "nonsmooth":
        cert = nonsmooth_certificate(args.M, args.R, N)
    else:
        if args.mu != 0:
            raise ValueError("closed-form certificates exist for mu = 0 only")
        cert = smooth_certificate(args.L, args.R, N)
    problem = build_gfom_pep(cert.cls, N, args.R)
    rep = verify_certificate(problem, cert, args.feas_tol)
    payload = {"omega": cert.omega, "verification": rep.to_dict(), "certificate": cert.to_dict()}
    if args.out:
        Path(args.out).write_text(cert.to_json(indent=2))
    if not rep.feasible:
        raise CommandFailed("certificate failed verification", payload)
    if args.json:
        _emit(_dump(payload), None)
    else:
        print(f"omega = {cert.omega:.10g}")
        print(f"psd_min_eig = {rep.psd_min_eig:.3e}  equality_residual = {rep.equality_residual:.3e}")


def _steps_from_file(path, N):
    d = _read_json(path)
    form = CanonicalForm.from_dict(d) if "h" in d else M.unroll_canonical(
        M.Factored(np.array(d["zeta"]), np.array(d["eta"]), float(d.get("L", 1.0))), int(d["N"]))
    h = getattr(form, "h", form)
    if N is not None and h.shape[0] - 1 != N:
        raise ValueError(f"{path} describes N={h.shape[0] - 1}, --N={N}")
    return h


def cmd_solve_pep(args):
    cls = _function_class(args)
    if args.canonical:
        h = _steps_from_file(args.canonical, args.N)
        N = h.shape[0] - 1
        problem = build_fixed_step_pep(cls, N, args.R, h)
    else:
        N = _require_N(args)
        problem = build_gfom_pep(cls, N, args.R)
    sol = solve(problem, _options(args))
    payload = sol.to_dict()
    if sol.status == OPTIMAL and problem.kind == "gfom":
        payload["certificate"] = extract_certificate(problem, sol, args.feas_tol).to_dict()
    if args.out:
        Path(args.out).write_text(_dump(payload))
    if sol.status != OPTIMAL:
        raise CommandFailed(f"solver status {sol.status}: {sol.diagnostics.get('message', '')}",
                            {"status": sol.status, "value": sol.value})
    if args.json:
        _emit(_dump({k: payload[k] for k in ("status", "value", "dual_objective", "iterations")}), None)
    else:
        print(f"omega = {sol.value:.10g}")
        if sol.value > 0:
            print(f"denominator = {1.0 / sol.value:.6g}")


def cmd_synthesize(args):
    if args.certificate:
        cert = DualCertificate.from_dict(_read_json(args.certificate))
    else:
        cls = _function_class(args)
        N = _require_N(args, 1)
        problem = build_gfom_pep(cls, N, args.R)
        sol = solve(problem, _options(args))
        if sol.status != OPTIMAL:
            raise CommandFailed(f"solver status {sol.status}")
        cert = extract_certificate(problem, sol, args.feas_tol)
    steps = synthesize_steps(cert)
    form = to_canonical(steps)
    _emit(_dump({"steps": steps.to_dict(), "canonical": form.to_dict(), "omega": cert.omega}), args.out)


def cmd_factorize(args):
    if not args.canonical:
        raise ValueError("--canonical FILE is required")
    d = _read_json(args.canonical)
    form = CanonicalForm.from_dict(d.get("canonical", d))
    fac = factorize(form, args.L)
    _emit(fac.to_csv("") if args.csv else _dump(fac.to_dict()), args.out)


_METHODS = {
    "gfom": lambda a: M.GFOM(),
    "ssep-subgradient": lambda a: M.SsepSubgradient(a.M, a.R),
    "ssep-subgradient-ls": lambda a: M.SsepSubgradientLS(),
    "ogm": lambda a: M.OGM(a.L),
    "ogm-ls": lambda a: M.OGMLS(),
    "um": lambda a: M.UM(),
    "fgm": lambda a: M.FGM(a.mu, a.L),
}


def _method_spec(args):
    if args.method == "canonical":
        return M.Canonical(_steps_from_file(args.canonical, None))
    if args.method == "factored":
        fac = FactoredForm.from_dict(_read_json(args.factored))
        return M.Factored(fac.zeta, fac.eta, args.L)
    return _METHODS[args.method](args)


def cmd_run(args):
    if not args.problem:
        raise ValueError("--problem FILE is required")
    N = _require_N(args)
    d = _read_json(args.problem)
    oracle = oracle_from_dict(d)
    x0 = np.asarray(d["x0"], float) if "x0" in d else np.zeros(oracle.d)
    f_star = d.get("f_star", oracle.f_star)
    traj = M.run_method(_method_spec(args), oracle, x0, N)
    for flag in traj.flags:
        print(f"warning: {flag}", file=sys.stderr)
    _emit(traj.to_csv(f_star), args.out)


def cmd_table1(args):
    kappas = args.kappa or ["inf", "1000", "100", "50"]
    cols = table1([parse_kappa(k) for k in kappas], args.N or 10, _options(args))
    if args.json:
        out = [{"kappa": "inf" if math.isinf(c.kappa) else c.kappa, "zeta": c.factored.zeta.tolist(),
                "eta": c.factored.eta.tolist(), "denominators": list(c.denominators),
                "residual": c.residual} for c in cols]
        _emit(_dump(out), args.out)
    else:
        _emit(table1_csv(cols), args.out)


def cmd_figure1(args):
    kappa = parse_kappa((args.kappa or ["100"])[0])
    lo, hi = args.N_range if args.N_range else (2, args.N if args.N is not None else 15)
    _emit(figure1_csv(figure1(kappa, range(lo, hi + 1), _options(args))), args.out)


COMMANDS = {
    "certify": cmd_certify,
    "solve-pep": cmd_solve_pep,
    "synthesize": cmd_synthesize,
    "factorize": cmd_factorize,
    "run": cmd_run,
    "table1": cmd_table1,
    "figure1": cmd_figure1,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--class", dest="cls", choices=["smooth", "nonsmooth"], default="smooth")
    common.add_argument("--mu", type=float, default=0.0)
    common.add_argument("--L", type=float, default=1.0)
    common.add_argument("--M", type=float, default=1.0)
    common.add_argument("--R", type=float, default=1.0)
    common.add_argument("--N", type=int)
    common.add_argument("--kappa", action="append", help="condition number, repeatable; 'inf' allowed")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--gap-tol", type=float, default=1e-10)
    common.add_argument("--feas-tol", type=float, default=1e-9)
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")

    p = argparse.ArgumentParser(prog="pepsynth", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("certify", parents=[common], help="verify a closed-form dual certificate")
    sp = sub.add_parser("solve-pep", parents=[common], help="solve a performance-estimation SDP")
    sp.add_argument("--canonical", help="canonical or factored step file; solves the fixed-step problem")
    sp = sub.add_parser("synthesize", parents=[common], help="certificate to fixed-step method")
    sp.add_argument("--certificate", help="certificate JSON (default: solve the GFOM problem)")
    sp = sub.add_parser("factorize", parents=[common], help="canonical steps to momentum parameters")
    sp.add_argument("--canonical", help="canonical step JSON")
    sp = sub.add_parser("run", parents=[common], help="run a method on a problem instance")
    sp.add_argument("--method", required=True, choices=sorted(_METHODS) + ["canonical", "factored"])
    sp.add_argument("--problem", help="oracle JSON, optionally with x0 and f_star")
    sp.add_argument("--canonical", help="canonical step JSON for --method canonical")
    sp.add_argument("--factored", help="factored JSON for --method factored")
    sub.add_parser("table1", parents=[common], help="momentum parameters and validation bounds")
    sp = sub.add_parser("figure1", parents=[common], help="worst-case bounds against N")
    sp.add_argument("--N-range", type=int, nargs=2, metavar=("START", "STOP"), help="inclusive range")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
        return 0
    except CommandFailed as exc:
        err = {"error": "CommandFailed", "command": args.command, "message": str(exc)}
        if exc.payload is not None:
            err["details"] = exc.payload
    except PipelineError as exc:
        err = {"error": "PipelineError", "command": args.command, "stage": exc.stage, "message": str(exc)}
    except Exception as exc:  # noqa: BLE001 - every failure is reported as JSON
        err = {"error": type(exc).__name__, "command": args.command, "message": str(exc)}
    sys.stderr.write(json.dumps(err, default=str) + "\n")
    return 1


if __name__ == "__main__":
    sys.exit(main())
