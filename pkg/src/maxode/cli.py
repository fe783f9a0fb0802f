"""Command-line front end.

Exit codes:

    0  success (converged / completed / all criteria passed)
    1  at least one verification criterion failed
    2  parse or schema error in the problem file
    3  I/O error
    4  Picard iteration did not converge
    5  non-finite state or expression domain error during a solve
    6  the requested existence guarantee does not cover the horizon
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import verify
from .errors import EvalDomainError, NonFiniteError, ProblemError
from .expr import Constant, MaxVar, Pow, StateVar, Sub, load_problem, to_string
from .horizon import (ContractionData, contraction_data, existence_horizon,
                      logistic_horizon, logistic_horizon_opt, quadratic_feasible,
                      quadratic_search)
from .integrate import euler_max, heun_max
from .picard import GRID_SLACK, PicardConfig, running_maxima, solve_picard
from .trajectory import Grid, write_csv

EXIT_OK, EXIT_VERIFY, EXIT_SCHEMA, EXIT_IO = 0, 1, 2, 3
EXIT_NOT_CONVERGED, EXIT_NONFINITE, EXIT_HORIZON = 4, 5, 6


@dataclass
class RunManifest:
    subcommand: str
    input: str
    digest: str
    method: str = ""
    grid: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    exit_code: int = 0


def spec_digest(spec) -> str:
    return hashlib.sha256(spec.canonical().encode()).hexdigest()


def _err(msg):
    print(f"maxode: {msg}", file=sys.stderr)


def _load(path):
    """Load a problem file, mapping failures onto exit codes."""
    try:
        return load_problem(path), EXIT_OK
    except OSError as exc:
        _err(f"cannot read {path}: {exc.strerror or exc}")
        return None, EXIT_IO
    except ProblemError as exc:
        _err(f"{path}: {exc}")
        return None, EXIT_SCHEMA


def _dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# existence guarantees for --require-horizon
# --------------------------------------------------------------------------

_LOGISTIC_F = (Sub(StateVar(1), MaxVar(1)),)
_LOGISTIC_H = (Pow(StateVar(1), Constant(2.0)),)
_QUADRATIC_F = (Sub(StateVar(1), MaxVar(2)), Sub(StateVar(2), MaxVar(1)))
_QUADRATIC_H = (Pow(StateVar(1), Constant(2.0)), Pow(StateVar(2), Constant(2.0)))


def _contraction_inputs(spec, args):
    overrides = (args.M, args.Lf, args.Lg)
    alpha = args.alpha if args.alpha is not None else 1.0
    T_ref = args.tref if args.tref is not None else spec.T
    if all(v is not None for v in overrides):
        return ContractionData(alpha, T_ref, args.M, args.Lf, args.Lg, spec.m)
    data = contraction_data(spec, alpha, T_ref, args.samples)
    # partially supplied constants replace their estimates
    return ContractionData(alpha, T_ref,
                           data.M if args.M is None else args.M,
                           data.L_f if args.Lf is None else args.Lf,
                           data.L_g if args.Lg is None else args.Lg,
                           spec.m, estimated=True)


def check_guarantee(spec, kind, t_end, args):
    """Return ``(ok, info, message)`` for the requested existence result.

    Raises ``ProblemError`` when the problem does not have the structure the
    result applies to.
    """
    if kind == "logistic":
        if spec.f != _LOGISTIC_F or spec.maxima != _LOGISTIC_H:
            raise ProblemError("logistic guarantee needs f = [x1 - m1], maxima = [x1^2]")
        x0 = spec.x0[0]
        if args.alpha is not None:
            alpha, bound = args.alpha, logistic_horizon(x0, args.alpha)
        else:
            alpha, bound, _ = logistic_horizon_opt(x0)
        info = {"kind": kind, "alpha": alpha, "t_bound": bound, "t_end": t_end}
        return t_end < bound, info, f"t_end = {t_end} is not below the horizon {bound:.6g}"
    if kind == "quadratic":
        if spec.f != _QUADRATIC_F or spec.maxima != _QUADRATIC_H:
            raise ProblemError("quadratic guarantee needs f = [x1 - m2, x2 - m1], "
                               "maxima = [x1^2, x2^2]")
        x0, y0 = spec.x0
        c0 = args.c0 if args.c0 is not None else quadratic_search(x0, y0, t_end)
        if c0 is None:
            return False, {"kind": kind, "c0": None}, "no feasible c0 on the search range"
        feas = quadratic_feasible(x0, y0, t_end, c0)
        info = {"kind": kind, **feas.to_dict()}
        return feas.feasible, info, "failing inequality: " + "; ".join(feas.failing())
    if kind == "contraction":
        try:
            data = _contraction_inputs(spec, args)
        except ValueError as exc:
            raise ProblemError(str(exc)) from exc
        hr = existence_horizon(data)
        info = {"kind": kind, **hr.to_dict(), "M": data.M, "L_f": data.L_f,
                "L_g": data.L_g, "estimated": data.estimated}
        return t_end < hr.T_sup, info, (f"t_end = {t_end} is not below the contraction "
                                        f"horizon {hr.T_sup:.6g} ({hr.branch} branch)")
    raise ValueError(kind)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_parse_check(args):
    spec, code = _load(args.problem)
    if spec is None:
        return code
    for i, e in enumerate(spec.f):
        print(f"f[{i}]      = {to_string(e)}")
    for j, e in enumerate(spec.maxima):
        print(f"maxima[{j}] = {to_string(e)}")
    print(f"x0 = {list(spec.x0)}  T = {spec.T!r}  m = {spec.m}  k = {spec.k}")
    print(f"digest {spec_digest(spec)}")
    return EXIT_OK


def _grid_for(spec, args):
    t_end = spec.T if args.tend is None else args.tend
    if t_end > spec.T:
        _err(f"warning: --tend {t_end} exceeds the problem horizon; clamped to {spec.T}")
        t_end = spec.T
    if not t_end > 0:
        raise ProblemError("--tend must be positive")
    return Grid.from_end(t_end, args.steps)


def _solve(args, method):
    spec, code = _load(args.problem)
    if spec is None:
        return code
    try:
        grid = _grid_for(spec, args)
    except ProblemError as exc:
        _err(str(exc))
        return EXIT_SCHEMA
    manifest = RunManifest(args.command, str(args.problem), spec_digest(spec), method,
                           {"n_steps": grid.n_steps, "h": grid.h, "t_end": grid.end})
    doc = {"problem": spec.to_dict()}

    guarantee_kind = getattr(args, "require_horizon", None)
    contraction_q = None
    if guarantee_kind:
        try:
            ok, info, message = check_guarantee(spec, guarantee_kind, grid.end, args)
        except ProblemError as exc:
            _err(str(exc))
            return EXIT_SCHEMA
        doc["horizon"] = info
        if not ok:
            _err(message)
            return EXIT_HORIZON
        if guarantee_kind == "contraction":
            contraction_q = info["contraction_factor"] * grid.end / info["t_rec"]
    elif method == "picard" and args.alpha is not None and spec.is_componentwise():
        info = existence_horizon(_contraction_inputs(spec, args))
        if grid.end < info.T_sup:
            lip = info.contraction_factor / info.T_rec
            contraction_q = grid.end * lip

    try:
        if method == "euler":
            traj = euler_max(spec, grid)
        elif method == "heun":
            traj = heun_max(spec, grid)
        else:
            cfg = PicardConfig(grid, args.tol, args.max_iter)
            traj, report = solve_picard(spec, cfg, contraction_q, args.epsilon_grid)
            doc["report"] = report.to_dict()
        maxima = running_maxima(spec, traj)
    except (NonFiniteError, EvalDomainError) as exc:
        _err(f"solve aborted: {exc}")
        return EXIT_NONFINITE

    code = EXIT_OK
    if method == "picard" and not doc["report"]["converged"]:
        _err(f"Picard iteration did not converge in {args.max_iter} iterations")
        code = EXIT_NOT_CONVERGED

    out_dir = Path(args.out_dir)
    stem = Path(args.problem).stem
    csv_path = out_dir / f"{stem}.{method}.csv"
    json_path = out_dir / f"{stem}.{method}.json"
    manifest.outputs = [str(csv_path), str(json_path)]
    manifest.exit_code = code
    doc["manifest"] = asdict(manifest)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(csv_path, traj, maxima)
        _dump_json(doc, json_path)
    except OSError as exc:
        _err(f"cannot write output: {exc}")
        return EXIT_IO
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    if method == "picard":
        rep = doc["report"]
        print(f"picard: converged={rep['converged']} n_iters={rep['n_iters']} "
              f"last delta={rep['deltas'][-1]:.3g} bound_violations={rep['bound_violations']}")
    return code


def cmd_solve(args):
    return _solve(args, args.method)


def cmd_picard(args):
    return _solve(args, "picard")


def cmd_horizon(args):
    spec, code = _load(args.problem)
    if spec is None:
        return code
    try:
        data = _contraction_inputs(spec, args)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_SCHEMA
    hr = existence_horizon(data)
    out = {**hr.to_dict(), "alpha": data.alpha, "T": data.T, "M": data.M,
           "L_f": data.L_f, "L_g": data.L_g, "m": data.m, "estimated": data.estimated}
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_verify(args):
    ctx = verify.Context(slack_factor=args.epsilon_grid, seed=args.seed)
    results = verify.run(args.filter, ctx)
    if not results:
        _err(f"no criteria match {args.filter!r}")
        return EXIT_VERIFY
    print(verify.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


# --------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=argparse.SUPPRESS,
                        help="directory for CSV/JSON outputs (default: .)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for generated test corpora (default: 0)")
    common.add_argument("--epsilon-grid", type=float, default=argparse.SUPPRESS,
                        help=f"discretization slack as a multiple of h (default: {GRID_SLACK:g})")

    parser = argparse.ArgumentParser(
        prog="maxode", parents=[common],
        description="Solve and verify IVPs for differential systems with running maxima.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse-check", parents=[common], help="validate a problem file")
    p.add_argument("problem")
    p.set_defaults(func=cmd_parse_check)

    def constants(p):
        p.add_argument("--alpha", type=float, help="ball radius")
        p.add_argument("--tref", type=float, help="reference horizon for the constants")
        p.add_argument("--M", type=float, help="bound of f (overrides estimate)")
        p.add_argument("--Lf", type=float, help="Lipschitz constant of f (overrides estimate)")
        p.add_argument("--Lg", type=float,
                       help="Lipschitz constant of the functionals (overrides estimate)")
        p.add_argument("--samples", type=int, default=33, help="lattice points per dimension")

    def solving(p):
        p.add_argument("problem")
        p.add_argument("--steps", type=int, default=1000)
        p.add_argument("--tend", type=float, help="end time (clamped to the problem's T)")
        p.add_argument("--tol", type=float, default=1e-12)
        p.add_argument("--max-iter", type=int, default=200)
        p.add_argument("--require-horizon", choices=["contraction", "logistic", "quadratic"],
                       help="refuse to solve unless this existence result covers [0, tend]")
        p.add_argument("--c0", type=float, help="uniform bound for the quadratic guarantee")
        constants(p)

    p = sub.add_parser("solve", parents=[common], help="integrate a problem")
    solving(p)
    p.add_argument("--method", choices=["euler", "heun", "picard"], default="heun")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("picard", parents=[common], help="Picard iteration with report")
    solving(p)
    p.set_defaults(func=cmd_picard)

    p = sub.add_parser("horizon", parents=[common], help="contraction existence horizon")
    p.add_argument("problem")
    constants(p)
    p.set_defaults(func=cmd_horizon)

    p = sub.add_parser("verify", parents=[common], help="run the bundled verification suite")
    p.add_argument("--filter", help="only criteria whose id, title or tag contains this")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    for name, default in (("out_dir", "."), ("seed", 0), ("epsilon_grid", GRID_SLACK)):
        if not hasattr(args, name):
            setattr(args, name, default)
    if hasattr(args, "steps") and args.steps < 1:
        _err("--steps must be at least 1")
        return EXIT_SCHEMA
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
