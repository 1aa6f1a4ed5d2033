"""Command-line front end.

Exit status: 0 on success, 2 on invalid input (unreadable file, schema or
domain violation), 3 when a ``--check`` assertion or a suite row fails.
"""

from __future__ import annotations

import argparse
import logging
import sys as _sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynsys import ValidationError, cycle_decomposition
from .ess import EPS_LADDER, ess_sweep
from .formats import (
    load_measure,
    load_partition,
    load_system,
    load_vector,
    random_system,
    save_system,
    write_csv,
    write_json,
)
from .partitions import singleton_partition
from .shiftop import spectral_report
from .suite import run_suite
from .tentropy import DEFAULT_TOL, tau, tau_n, tau_n_D
from .verify import vp_check

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CHECK_FAILED = 3

log = logging.getLogger("shiftvp")


class CheckFailed(Exception):
    pass


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _eps_list(text):
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("need positive comma-separated values")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", action="append", help="system JSON file (vp accepts several)")
    common.add_argument("--phi", help="potential JSON file {\"values\": [...]}; default 0")
    common.add_argument("--mu", help="measure JSON file {\"values\": [...]}")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--n-max", type=int, default=None)
    common.add_argument("--mode", choices=("exact", "greedy"), default="exact")
    common.add_argument("--tol", type=_positive_float, default=None)
    common.add_argument("--out", help="output file; stdout if omitted")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--check", action="store_true", help="exit 3 if the module's assertions fail")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="shiftvp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"shiftvp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a random system")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--kind", choices=("random", "permutation"), default="random")
    g.add_argument("--unit-mass", action="store_true")

    sub.add_parser("spectral", parents=[common], help="lambda(phi) by three methods")

    t = sub.add_parser("tentropy", parents=[common], help="tau_n(mu, D), tau_n(mu) or tau(mu)")
    t.add_argument("--level", choices=("tau_n_D", "tau_n", "tau"), default="tau")
    t.add_argument("--n", type=int, default=1, help="n for tau_n_D and tau_n")
    t.add_argument("--partition", help="partition JSON file {\"blocks\": [...]}; default singletons")
    t.add_argument("--budget", type=int, default=None, help="cap on enumerated partitions")

    v = sub.add_parser("vp", parents=[common], help="variational principle gap")
    v.add_argument("--random", type=int, default=0, metavar="COUNT",
                   help="also check COUNT random systems (n <= 6, phi in [-3, 3]) drawn from --seed")

    e = sub.add_parser("ess", parents=[common], help="X_n decay sweep and the bound on int f o alpha^n")
    e.add_argument("--t", type=float, default=None, help="rate; default tau_hat(mu) + 0.1")
    e.add_argument("--eps", type=_eps_list, default=EPS_LADDER, help="comma-separated radii")
    e.add_argument("--partition", help="partition JSON file; default singletons")
    e.add_argument("--f", help="nonnegative test function JSON file; default 1")

    sub.add_parser("suite", parents=[common], help="run every acceptance criterion")
    return p


def _one_system(args):
    if not args.system:
        raise ValidationError("--system is required")
    if len(args.system) > 1:
        raise ValidationError(f"{args.command} takes a single --system")
    return load_system(args.system[0])


def _phi(args, sys):
    return np.zeros(sys.n) if args.phi is None else load_vector(args.phi, sys)


def _mu(args, sys):
    if args.mu is None:
        raise ValidationError("--mu is required")
    return load_measure(args.mu, sys)


def _emit(args, record, csv_rows=None, columns=None):
    if args.format == "csv":
        rows = csv_rows if csv_rows is not None else [record]
        text = write_csv(rows, args.out, columns)
    else:
        text = write_json(record, args.out)
    if args.out is None:
        _sys.stdout.write(text)


def cmd_gen(args):
    rng = np.random.default_rng(args.seed)
    sys = random_system(rng, args.n, args.kind, args.unit_mass)
    text = save_system(sys, args.out)
    if args.out is None:
        _sys.stdout.write(text)


def cmd_spectral(args):
    sys = _one_system(args)
    phi = _phi(args, sys)
    k_max = args.n_max or 64
    rep = spectral_report(sys, phi, k_max=k_max, tol=args.tol or 1e-11)
    rec = rep.to_record()
    _emit(args, rec, columns=["lambda", "lambda_power", "tail_bound_K", "norm_limit"])
    if args.check:
        k = np.arange(1, k_max + 1)
        err_power = abs(rec["lambda"] - rec["lambda_power"])
        err_limit = np.abs(np.asarray(rec["norm_limit"]) - rec["lambda"]) - rec["tail_bound_K"] / k
        if err_power > 1e-9 or np.max(err_limit) > 1e-12:
            raise CheckFailed(f"spectral methods disagree (power {err_power:.3g}, limit {np.max(err_limit):.3g})")


def cmd_tentropy(args):
    sys = _one_system(args)
    mu = _mu(args, sys)
    tol = args.tol or DEFAULT_TOL
    if args.n < 1:
        raise ValidationError("--n must be >= 1")
    if args.level == "tau_n_D":
        D = load_partition(args.partition, sys) if args.partition else singleton_partition(sys)
        rep = tau_n_D(sys, mu, D, args.n, tol=tol)
    elif args.level == "tau_n":
        rep = tau_n(sys, mu, args.n, mode=args.mode, tol=tol, budget=args.budget)
    else:
        rep = tau(sys, mu, args.n_max or 8, mode=args.mode, tol=tol, budget=args.budget)
    rec = rep.to_record()
    cols = ["value", "level", "n", "partition_mode", "iterations", "certified_direction", "converged", "gap"]
    _emit(args, rec, columns=cols)
    if args.check and not rep.converged:
        raise CheckFailed(f"inner solver stopped with gap {rep.gap:.3g} above tol {tol:.3g}")


def cmd_vp(args):
    n_max = args.n_max or 12
    tol = args.tol or DEFAULT_TOL
    jobs = []
    for path in args.system or []:
        sys = load_system(path)
        jobs.append((Path(path).stem, sys, _phi(args, sys)))
    if args.random:
        rng = np.random.default_rng(args.seed)
        for i in range(args.random):
            n = int(rng.integers(1, 7))
            sys = random_system(rng, n)
            jobs.append((f"random-{i}", sys, rng.uniform(-3, 3, size=n)))
    if not jobs:
        raise ValidationError("vp needs --system or --random")

    reports = []
    for sid, sys, phi in jobs:
        rep = vp_check(sys, phi, n_max=n_max, mode=args.mode, tol=tol, ladder=(2, 4, 8))
        log.info("%s: %d cycles, gap %.3g", sid, len(cycle_decomposition(sys).cycles), rep.gap)
        reports.append((sid, rep))
    records = [dict(system_id=sid, **rep.to_record()) for sid, rep in reports]
    csv_rows = [{"system-id": sid, "lambda": rep.lambda_, "rhs": rep.rhs_estimate, "gap": rep.gap,
                 "argmax-weights": rep.argmax_weights} for sid, rep in reports]
    _emit(args, records[0] if len(records) == 1 else records, csv_rows)
    if args.check:
        bad = [sid for sid, rep in reports if not -1e-6 <= rep.gap <= 0.1]
        if bad:
            raise CheckFailed(f"gap outside [-1e-6, 0.1] for {', '.join(bad)}")


def cmd_ess(args):
    sys = _one_system(args)
    mu = _mu(args, sys)
    D = load_partition(args.partition, sys) if args.partition else singleton_partition(sys)
    f = load_vector(args.f, sys) if args.f else None
    t = args.t
    if t is None:
        mode = args.mode if sys.n <= 10 else "greedy"
        t = tau(sys, mu, 8, mode=mode).value + 0.1
    sweep = ess_sweep(sys, mu, D, args.eps, args.n_max or 20, f, t)
    rec = {
        "t": t,
        "fitted_rate": {str(k): v for k, v in sweep.fitted_rate.items()},
        "nonempty": {str(k): v for k, v in sweep.nonempty.items()},
        "min_C": {str(k): v for k, v in sweep.min_C.items()},
        "rows": sweep.to_csv_rows(),
    }
    _emit(args, rec, sweep.to_csv_rows(), ["eps", "n", "measure", "rate", "min_C", "bound_holds"])
    if args.check:
        if not all(r.bound_holds for r in sweep.rows):
            raise CheckFailed("integral bound violated")
        usable = [e for e in args.eps if sweep.nonempty[e] >= 3]
        if usable and sweep.fitted_rate[min(usable)] > t:
            raise CheckFailed(f"fitted rate {sweep.fitted_rate[min(usable)]:.6g} exceeds t = {t:.6g}")


def cmd_suite(args):
    report = run_suite(args.seed)
    rows = [{"id": r["id"], "name": r["name"], "passed": r["passed"]} for r in report["criteria"]]
    _emit(args, report, rows)
    for r in rows:
        print(f"criterion {r['id']:2d} {r['name']:<50s} {'PASS' if r['passed'] else 'FAIL'}", file=_sys.stderr)
    if not report["passed"]:
        raise CheckFailed("some acceptance criteria failed")


COMMANDS = {
    "gen": cmd_gen,
    "spectral": cmd_spectral,
    "tentropy": cmd_tentropy,
    "vp": cmd_vp,
    "ess": cmd_ess,
    "suite": cmd_suite,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except CheckFailed as exc:
        log.error("check failed: %s", exc)
        return EXIT_CHECK_FAILED
    except (ValueError, OSError) as exc:
        # ValidationError is a ValueError
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    _sys.exit(main())
