"""Command-line front end.

Examples::

    python -m linfcontrol norm --system scalar:a=1,b=1 --y0 1 --T 1
    python -m linfcontrol time --system dint --y0 1,0 --M 1
    python -m linfcontrol sweep-norm --system dint --y0 1,0 --start 0.5 --stop 8 --points 9 --spacing log
    python -m linfcontrol classify --system model.json --y0 e2 --T 3

Exit codes: 0 success, 2 usage error, 3 no admissible control (or an
infeasible minimal-norm problem), 4 solver did not converge, 5 a
cross-validation check failed.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .classifier import (
    classification_record,
    classify_norm_pair,
    classify_time_pair,
    cross_validate,
    finite_dim_boundary_data,
)
from .lti import DimensionError
from .models import double_integrator, load_model, scalar_system
from .norm_solver import (
    NormOptions,
    NormProblem,
    NotConverged,
    Status,
    minimal_norm,
    norm_at_infinity,
    null_control_cost,
    write_norm_csv,
)
from .time_solver import TimeProblem, TimeStatus, minimal_time, write_time_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CONTROL = 3
EXIT_NOT_CONVERGED = 4
EXIT_VALIDATION = 5

THREADS_ENV = "LINFCONTROL_THREADS"


class UsageError(ValueError):
    pass


def _f(x):
    return f"{x:.9g}"


def parse_system(spec):
    """``scalar:a=..,b=..``, ``dint``, or a JSON system / model file.

    Returns ``(system, truncated)`` where ``truncated`` tells whether the
    system is a Galerkin truncation of a spectral model.
    """
    if spec == "dint":
        return double_integrator(), False
    if spec.startswith("scalar:"):
        params = {"a": 0.0, "b": 1.0}
        for item in filter(None, spec[len("scalar:"):].split(",")):
            key, sep, val = item.partition("=")
            if not sep or key.strip() not in params:
                raise UsageError(f"--system: bad scalar parameter {item!r}")
            try:
                params[key.strip()] = float(val)
            except ValueError:
                raise UsageError(f"--system: {key.strip()} must be a number") from None
        try:
            return scalar_system(params["a"], params["b"]), False
        except ValueError as exc:
            raise UsageError(f"--system: {exc}") from None
    try:
        sysm, model = load_model(spec)
    except FileNotFoundError:
        raise UsageError(f"--system: no such file {spec!r}") from None
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"--system: {spec}: {exc}") from None
    return sysm, model is not None


def parse_vector(text, n):
    """``"1,0"``, ``"e2"`` (second unit vector) or ``"ones"``."""
    t = text.strip().lower()
    if t == "ones":
        return np.ones(n)
    if t.startswith("e") and t[1:].isdigit():
        j = int(t[1:])
        if not 1 <= j <= n:
            raise UsageError(f"--y0: unit vector index {j} outside 1..{n}")
        y = np.zeros(n)
        y[j - 1] = 1.0
        return y
    try:
        y = np.array([float(x) for x in t.replace(" ", "").split(",")])
    except ValueError:
        raise UsageError(f"--y0: cannot parse {text!r}") from None
    if y.size != n:
        raise UsageError(f"--y0: expected {n} entries, got {y.size}")
    if not np.any(y):
        raise UsageError("--y0: initial state must be nonzero")
    return y


def sweep_values(args):
    if args.start is None or args.stop is None:
        raise UsageError("sweep: --start and --stop are required")
    if not 0 < args.start < args.stop:
        raise UsageError("sweep: need 0 < start < stop")
    if args.points < 2:
        raise UsageError("sweep: --points must be at least 2")
    if args.spacing == "log":
        return np.geomspace(args.start, args.stop, args.points)
    return np.linspace(args.start, args.stop, args.points)


def _workers(args):
    if args.jobs:
        return args.jobs
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _pmap(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def _emit_json(rec, path):
    text = json.dumps(rec, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def cmd_norm(args, sysm, y0, opts, out):
    sol = minimal_norm(NormProblem(sysm, y0, args.T), opts)
    if args.output:
        write_norm_csv(args.output, [args.T], [sol])
    if sol.status is Status.INFEASIBLE:
        print(f"status Infeasible  N inf  T {_f(args.T)}", file=out)
        return EXIT_NO_CONTROL
    print(
        f"status {sol.status.value}  N {_f(sol.value)}  T {_f(args.T)}  "
        f"residual {_f(sol.residual)}  bb_fraction {_f(sol.bb_fraction)}",
        file=out,
    )
    return EXIT_OK


def cmd_time(args, sysm, y0, opts, out):
    sol = minimal_time(TimeProblem(sysm, y0, args.M), opts, rtol=args.rtol)
    if args.output:
        write_time_csv(args.output, [args.M], [sol])
    if sol.status is TimeStatus.NO_ADMISSIBLE:
        lim = sol.limit.value if sol.limit else math.inf
        print(f"status NoAdmissibleControl  M {_f(args.M)}  N_inf {_f(lim)}", file=out)
        return EXIT_NO_CONTROL
    print(
        f"status Solved  T {_f(sol.value)}  M {_f(args.M)}  "
        f"residual {_f(sol.residual)}  bb_fraction {_f(sol.bb_fraction)}",
        file=out,
    )
    return EXIT_OK


def cmd_sweep_norm(args, sysm, y0, opts, out):
    Ts = sweep_values(args)
    sols = _pmap(lambda T: minimal_norm(NormProblem(sysm, y0, T), opts), Ts, _workers(args))
    fh = _open_out(args.output)
    try:
        write_norm_csv(fh, Ts, sols)
    finally:
        if args.output:
            fh.close()
    return EXIT_OK


def cmd_sweep_time(args, sysm, y0, opts, out):
    Ms = sweep_values(args)
    limit = norm_at_infinity(sysm, y0, opts)
    sols = _pmap(
        lambda M: minimal_time(TimeProblem(sysm, y0, M), opts, rtol=args.rtol, limit=limit),
        Ms,
        _workers(args),
    )
    fh = _open_out(args.output)
    try:
        write_time_csv(fh, Ms, sols)
    finally:
        if args.output:
            fh.close()
    return EXIT_OK


def _classify(args, sysm, y0, opts):
    if (args.T is None) == (args.M is None):
        raise UsageError("classify: pass exactly one of --T and --M")
    limit = norm_at_infinity(sysm, y0, opts)
    bd = finite_dim_boundary_data(sysm, y0, opts, limit=limit)
    if args.T is not None:
        label, inputs = classify_norm_pair(bd, args.T), {"T": args.T}
    else:
        label, inputs = classify_time_pair(bd, args.M, rtol=1e-9), {"M": args.M}
    inputs["y0"] = list(y0)
    return label, bd, inputs, limit


def cmd_classify(args, sysm, y0, opts, out):
    label, bd, inputs, _ = _classify(args, sysm, y0, opts)
    _emit_json(classification_record(label, bd, inputs, args.truncated), args.output)
    return EXIT_OK


def cmd_validate(args, sysm, y0, opts, out):
    label, bd, inputs, limit = _classify(args, sysm, y0, opts)
    if args.T is not None:
        sol = minimal_norm(NormProblem(sysm, y0, args.T), opts)
    else:
        sol = minimal_time(TimeProblem(sysm, y0, args.M), opts, rtol=args.rtol, limit=limit)
    rep = cross_validate(label, sol)
    rec = classification_record(label, bd, inputs, args.truncated)
    rec["agreements"] = list(rep.agreements)
    rec["violations"] = list(rep.violations)
    rec["skipped"] = rep.skipped
    _emit_json(rec, args.output)
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_cost(args, sysm, y0, opts, out):
    est = null_control_cost(sysm, args.T, opts, seed=args.seed)
    print(f"cost_lower_bound {_f(est.value)}  T {_f(args.T)}", file=out)
    return EXIT_OK


COMMANDS = {
    "norm": cmd_norm,
    "time": cmd_time,
    "sweep-norm": cmd_sweep_norm,
    "sweep-time": cmd_sweep_time,
    "classify": cmd_classify,
    "validate": cmd_validate,
    "cost": cmd_cost,
}
NEEDS = {"norm": "T", "time": "M", "cost": "T"}


def build_parser():
    p = argparse.ArgumentParser(prog="linfcontrol", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--system", required=True, help="scalar:a=..,b=.., dint, or a JSON file")
        if name != "cost":
            s.add_argument("--y0", required=True, help="comma list, eK, or ones")
        s.add_argument("--T", type=float)
        s.add_argument("--M", type=float)
        if name.startswith("sweep"):
            s.add_argument("--start", type=float)
            s.add_argument("--stop", type=float)
            s.add_argument("--points", type=int, default=20)
            s.add_argument("--spacing", choices=("linear", "log"), default="linear")
            s.add_argument("--jobs", type=int, default=0, help=f"worker threads (default ${THREADS_ENV} or 1)")
        s.add_argument("--K", type=int, default=512, help="time panels")
        s.add_argument("--rtol", type=float, default=1e-6, help="bisection tolerance")
        s.add_argument("--max-iter", type=int, default=60, help="Newton steps per solve")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--output", "-o")
    return p


def run(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        need = NEEDS.get(args.command)
        if need and getattr(args, need) is None:
            raise UsageError(f"{args.command}: --{need} is required")
        for key in ("T", "M"):
            v = getattr(args, key)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise UsageError(f"--{key}: must be finite and positive")
        if args.K < 1 or args.max_iter < 1 or not args.rtol > 0:
            raise UsageError("--K, --max-iter and --rtol must be positive")
        sysm, args.truncated = parse_system(args.system)
        y0 = parse_vector(args.y0, sysm.n) if args.command != "cost" else None
        opts = NormOptions(K=args.K, max_newton=args.max_iter)
        return COMMANDS[args.command](args, sysm, y0, opts, out)
    except (UsageError, DimensionError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotConverged as exc:
        print(f"{parser.prog}: not converged: {exc} (best lower bound {exc.best_lower})", file=sys.stderr)
        return EXIT_NOT_CONVERGED


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
