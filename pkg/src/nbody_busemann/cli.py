"""Command-line interface.

Exit codes: 0 success, 1 numerical failure, 2 usage or input error.
``BUSEMANN_THREADS`` caps the number of worker processes.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import busemann as B
from . import io as fio
from . import kepler as K
from .central import CentralConfigError, find_minimal
from .core import HomotheticMotion, MassSystem
from .lambert import lambert_geometry, planar_action
from .pathopt import MinimizeOptions, OptimizationError, minimize_fixed_time, minimize_free_time

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# --- shared options -----------------------------------------------------------


def _add_system(p, required=False):
    p.add_argument("--system", help="MassSystem JSON {masses, dim}")
    p.add_argument("--masses", type=_floats, required=False, help="comma-separated masses")
    p.add_argument("--dim", type=int, default=2)
    p.set_defaults(_system_required=required)


def _add_opts(p):
    g = p.add_argument_group("solver")
    g.add_argument("--segments", type=int, default=96)
    g.add_argument("--refinements", type=int, default=1)
    g.add_argument("--restarts", type=int, default=3)
    g.add_argument("--gtol", type=float, default=1e-9)
    g.add_argument("--rng", type=int, default=0, help="seed for all randomized choices")


def _add_motion(p):
    p.add_argument("--central", help="CentralConfig JSON defining x0 and U0 (default: computed)")
    p.add_argument("--seeds", type=int, default=8)


def _system(args) -> MassSystem:
    if args.system:
        return fio.read_system(args.system)
    if args.masses:
        return MassSystem(tuple(args.masses), args.dim)
    if args._system_required:
        raise UsageError("one of --system or --masses is required")
    return MassSystem((1.0, 1.0, 1.0), args.dim)


def _opts(args) -> MinimizeOptions:
    return MinimizeOptions(
        segments=args.segments,
        refinement_levels=args.refinements,
        restarts=args.restarts,
        gradient_tolerance=args.gtol,
        rng_seed=args.rng,
    )


def _motion(args, sys: MassSystem) -> HomotheticMotion:
    if args.central:
        data = json.loads(Path(args.central).read_text())
        return HomotheticMotion(sys.check(np.array(data["positions"])), float(data["U0"]))
    cc = find_minimal(sys, seed_count=args.seeds, rng_seed=args.rng)
    return HomotheticMotion(cc.x0, cc.U0)


def _point(spec: str, sys: MassSystem) -> np.ndarray:
    if spec == "0":
        return np.zeros(sys.shape)
    return fio.read_configuration(spec, sys)


# --- commands -----------------------------------------------------------------


def cmd_central(args) -> int:
    sys_ = _system(args)
    try:
        cc = find_minimal(sys_, seed_count=args.seeds, rng_seed=args.rng, tol=args.tol)
    except CentralConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(json.dumps(exc.diagnostics, indent=2, default=float), file=sys.stderr)
        return EXIT_NUMERIC
    _emit(fio.json_text(cc.to_json()), args.out)
    return EXIT_OK


def cmd_kepler(args) -> int:
    kp = K.Kepler1D(args.u0)
    if args.what == "action":
        arc = K.solve_arc(kp, args.a, args.b, args.t)
        value, extra = arc.action, {"h": arc.h, "branch": arc.branch, "r_max": arc.r_max}
    elif args.what == "free":
        value, extra = K.action_free(kp, args.a, args.b), {}
    elif args.what == "gap":
        r = kp.c if args.r is None else args.r
        value, extra = K.gap_G(kp, r), {"r": r}
    elif args.what == "time":
        value, extra = K.time_of_flight(kp, args.h, args.a, args.b, args.branch), {}
    else:  # energy
        h, branch = K.solve_energy(kp, args.a, args.b, args.t)
        value, extra = h, {"branch": branch}
    if args.json:
        _emit(fio.json_text({"quantity": args.what, "value": value, **extra}), None)
    else:
        print(repr(float(value)))
    return EXIT_OK


def cmd_lambert(args) -> int:
    kp = K.Kepler1D(args.u0)
    g = lambert_geometry(args.r, args.theta, args.R)
    value = planar_action(kp, args.r, args.theta, args.R, args.tau)
    _emit(fio.json_text({"action": value, "d1": g.d1, "d2": g.d2, "chord": g.chord}), args.out)
    return EXIT_OK


def cmd_phi(args) -> int:
    sys_ = _system(args)
    x, y = _point(args.x, sys_), _point(args.y, sys_)
    opts = _opts(args)
    est = minimize_fixed_time(sys_, x, y, args.T, opts) if args.T else minimize_free_time(sys_, x, y, opts)
    out = {
        "value": est.value,
        "discretization_error": est.discretization_error,
        "converged": est.converged,
        "duration": est.duration,
        "level_values": est.level_values,
    }
    _emit(fio.json_text(out), args.out)
    if args.trajectory and est.trajectory is not None:
        fio.write_trajectory(args.trajectory, est.trajectory)
    if args.scan and est.scan:
        fio.write_table(args.scan, ["T", "action"], est.scan)
    return EXIT_OK if est.converged else EXIT_NUMERIC


def cmd_busemann(args) -> int:
    sys_ = _system(args)
    hm = _motion(args, sys_)
    x = _point(args.point, sys_)
    schedule = args.schedule or None
    est = B.busemann_value(sys_, hm, x, schedule, _opts(args))
    _emit(fio.json_text(est.to_json()), args.out)
    if args.table:
        fio.write_table(args.table, ["t", "delta"], list(zip(est.horizons, est.deltas)))
    return EXIT_OK if est.monotone_ok and est.bounds_ok else EXIT_NUMERIC


def cmd_calibrate(args) -> int:
    sys_ = _system(args)
    hm = _motion(args, sys_)
    x = _point(args.point, sys_)
    rep = B.calibrating_curve(
        sys_, hm, x, args.horizons, _opts(args), sample_times=args.times, defect_times=args.defect_times or ()
    )
    rows = [
        [r["T"], r["t"], r["r_T"], r["theta_T"], r["defect"], r["defect_third"]] for r in B.asymptotic_check(rep)
    ]
    header = ["T", "t", "r_T", "theta_T", "defect", "defect_third"]
    if args.table:
        fio.write_table(args.table, header, rows)
    summary = {
        "horizons": rep.horizons,
        "time_ratios": B.time_ratio_check(rep),
        "cauchy": rep.cauchy,
        "restriction_time": rep.restriction_time,
        "calibration_defect": dict(zip(map(str, rep.defect_times), rep.calibration_defect)),
        "calibration_budget": dict(zip(map(str, rep.defect_times), rep.calibration_budget)),
        "failures": rep.failures,
    }
    _emit(fio.json_text(summary), args.out)
    return EXIT_NUMERIC if rep.failures else EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_verification

    sys_ = fio.read_system(args.system) if args.system else None

    def progress(chk):
        print(f"[{chk.status}] {chk.id} ({chk.runtime:.1f}s)", file=sys.stderr, flush=True)

    rep = run_verification(args.suite, args.quick, sys_, progress)
    _emit(fio.json_text(rep.to_json()), args.out)
    return EXIT_OK if rep.passed else EXIT_NUMERIC


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="busemann", description="N-body action potentials and Busemann functions")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("central", help="minimal central configuration")
    _add_system(c, required=True)
    c.add_argument("--seeds", type=int, default=8)
    c.add_argument("--rng", type=int, default=0)
    c.add_argument("--tol", type=float, default=1e-10)
    c.add_argument("--out")
    c.set_defaults(func=cmd_central)

    k = sub.add_parser("kepler", help="radial Kepler problem")
    k.add_argument("what", choices=["action", "free", "gap", "time", "energy"])
    k.add_argument("--u0", type=float, default=1.0)
    k.add_argument("--a", type=float, default=0.0)
    k.add_argument("--b", type=float)
    k.add_argument("--t", type=float)
    k.add_argument("--h", type=float)
    k.add_argument("--r", type=float)
    k.add_argument("--branch", choices=["direct", "reflected"], default="direct")
    k.add_argument("--json", action="store_true")
    k.set_defaults(func=cmd_kepler)

    lam = sub.add_parser("lambert", help="planar Kepler action via the radial reduction")
    lam.add_argument("--u0", type=float, default=1.0)
    lam.add_argument("--r", type=float, required=True)
    lam.add_argument("--theta", type=float, required=True)
    lam.add_argument("--R", type=float, required=True)
    lam.add_argument("--tau", type=float, required=True)
    lam.add_argument("--out")
    lam.set_defaults(func=cmd_lambert)

    ph = sub.add_parser("phi", help="fixed-time (--T) or free-time action potential")
    _add_system(ph)
    _add_opts(ph)
    ph.add_argument("--x", required=True, help="configuration CSV or 0")
    ph.add_argument("--y", required=True, help="configuration CSV or 0")
    ph.add_argument("--T", type=float)
    ph.add_argument("--trajectory", help="write the minimizer as CSV")
    ph.add_argument("--scan", help="write the duration scan as CSV")
    ph.add_argument("--out")
    ph.set_defaults(func=cmd_phi)

    b = sub.add_parser("busemann", help="u(x) from a horizon schedule")
    _add_system(b)
    _add_opts(b)
    _add_motion(b)
    b.add_argument("--point", required=True, help="configuration CSV or 0")
    b.add_argument("--schedule", type=_floats)
    b.add_argument("--table", help="write (t, delta) CSV")
    b.add_argument("--out")
    b.set_defaults(func=cmd_busemann)

    cal = sub.add_parser("calibrate", help="minimizers toward the homothetic ray")
    _add_system(cal)
    _add_opts(cal)
    _add_motion(cal)
    cal.add_argument("--point", required=True, help="configuration CSV")
    cal.add_argument("--horizons", type=_floats, required=True)
    cal.add_argument("--times", type=_floats, default=[10.0])
    cal.add_argument("--defect-times", type=_floats)
    cal.add_argument("--table", help="write (T, t, r_T, theta_T, defect) CSV")
    cal.add_argument("--out")
    cal.set_defaults(func=cmd_calibrate)

    v = sub.add_parser("verify", help="acceptance suite")
    v.add_argument("--suite", default="all", choices=["kepler", "central", "pathopt", "lambert", "busemann", "all"])
    v.add_argument("--quick", action="store_true")
    v.add_argument("--system", help="MassSystem JSON for the Busemann checks")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


_REQUIRED = {
    "action": ("b", "t"),
    "free": ("b",),
    "gap": (),
    "time": ("h", "b"),
    "energy": ("b", "t"),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "kepler":
        missing = [f"--{n}" for n in _REQUIRED[args.what] if getattr(args, n) is None]
        if missing:
            parser.error(f"kepler {args.what} requires {', '.join(missing)}")
    try:
        return args.func(args)
    except (UsageError, fio.FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OptimizationError, K.KeplerSolveError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
