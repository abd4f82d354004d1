"""Busemann function of the parabolic homothetic motion and its diagnostics.

``u(x) = lim_{t->inf} [phi(0, g(t)) - phi(x, g(t))]`` with ``g(t) = c t^(2/3) x0``.
The first term has the closed form ``2 (6 U0^2 t)^(1/3)``. The second comes
from the free-time path optimizer. The increments ``delta(t)`` are
nondecreasing in t, and the limit is estimated by Aitken extrapolation of the
last three horizons.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import HomotheticMotion, homothetic, mass_inner, mass_norm, potential, dual_norm
from .pathopt import MinimizeOptions, PotentialEstimate, Trajectory, discrete_action, minimize_free_time
from ._parallel import pmap

log = logging.getLogger(__name__)


class HorizonError(ValueError):
    pass


def phi_origin_homothetic(hm: HomotheticMotion, T: float) -> float:
    """``phi(0, g(T)) = 2 (6 U0^2 T)^(1/3)``."""
    if not T > 0:
        raise ValueError("T must be positive")
    return 2.0 * (6.0 * hm.U0**2 * T) ** (1.0 / 3.0)


def horizon_ok(sys, hm: HomotheticMotion, x, t: float) -> bool:
    """``c t^(2/3) > 2 ||x||``: the horizon point is well beyond x."""
    return hm.radius(t) > 2.0 * mass_norm(sys, x)


def first_horizon(sys, hm: HomotheticMotion, x, floor: float = 1.0) -> float:
    return max(floor, 1.25 * (2.0 * mass_norm(sys, x) / hm.c) ** 1.5)


def default_schedule(sys, hm: HomotheticMotion, x, points: int = 6, factor: float = 4.0) -> list[float]:
    t1 = first_horizon(sys, hm, x)
    return [t1 * factor**j for j in range(points)]


@dataclass
class DeltaSample:
    t: float
    value: float
    error: float
    duration: float = 0.0
    estimate: PotentialEstimate | None = field(default=None, repr=False)


def delta(sys, hm: HomotheticMotion, x, t: float, opts: MinimizeOptions | None = None) -> DeltaSample:
    """``phi(0, g(t)) - phi(x, g(t))`` with the discretization error of the second term."""
    x = sys.check(x)
    if not np.any(x):
        return DeltaSample(t, 0.0, 0.0, t)
    if not horizon_ok(sys, hm, x, t):
        raise HorizonError(f"horizon t={t} too short for ||x||={mass_norm(sys, x):.4g}")
    est = minimize_free_time(sys, x, homothetic(hm, t), opts)
    if not est.converged:
        log.warning("free-time minimization to horizon %g did not converge", t)
    return DeltaSample(t, phi_origin_homothetic(hm, t) - est.value, est.discretization_error, est.duration, est)


def aitken_limit(values, noise: float = 0.0) -> float:
    """Geometric-tail extrapolation from the last three values; falls back to the last one."""
    if len(values) < 3:
        return float(values[-1])
    d1 = values[-2] - values[-3]
    d2 = values[-1] - values[-2]
    if abs(d2) <= noise or abs(d1) <= noise:
        return float(values[-1])
    denom = d1 - d2
    if d1 * d2 <= 0 or abs(d2) >= abs(d1) or denom == 0:
        return float(values[-1])
    return float(values[-1] + d2 * d2 / denom)


@dataclass
class BusemannEstimate:
    horizons: list[float]
    deltas: list[float]
    errors: list[float]
    u_value: float
    monotone_ok: bool
    upper_bound: float
    lower_bound: float
    budget: float

    @property
    def bounds_ok(self) -> bool:
        tol = self.budget
        return self.lower_bound - tol <= self.u_value <= self.upper_bound + tol

    def to_json(self) -> dict:
        return {
            "schema": "v1",
            "horizons": self.horizons,
            "deltas": self.deltas,
            "errors": self.errors,
            "u": self.u_value,
            "monotone_ok": self.monotone_ok,
            "upper_bound": self.upper_bound,
            "lower_bound": self.lower_bound,
            "budget": self.budget,
        }


def _delta_job(args):
    sys, hm, x, t, opts = args
    s = delta(sys, hm, x, t, opts)
    s.estimate = None
    return s


def busemann_value(
    sys,
    hm: HomotheticMotion,
    x,
    schedule=None,
    opts: MinimizeOptions | None = None,
    bounds: bool = True,
) -> BusemannEstimate:
    """Estimate u(x) over an increasing horizon schedule.

    Monotonicity of the deltas is audited against twice the combined error
    budget. Violations set ``monotone_ok = False`` and are logged.
    """
    x = sys.check(x)
    if not np.any(x):
        hz = list(schedule or [1.0])
        return BusemannEstimate(hz, [0.0] * len(hz), [0.0] * len(hz), 0.0, True, 0.0, 0.0, 0.0)
    schedule = list(schedule) if schedule is not None else default_schedule(sys, hm, x)
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be increasing")
    for t in schedule:
        if not horizon_ok(sys, hm, x, t):
            raise HorizonError(f"horizon t={t} too short for ||x||={mass_norm(sys, x):.4g}")
    samples = pmap(_delta_job, [(sys, hm, x, t, opts) for t in schedule])
    deltas = [s.value for s in samples]
    errors = [s.error for s in samples]
    monotone = all(
        deltas[j + 1] >= deltas[j] - 2 * (errors[j] + errors[j + 1]) for j in range(len(deltas) - 1)
    )
    if not monotone:
        log.warning("delta(t) not monotone within budget at x: %s", deltas)
    budget = 2 * max(errors)
    u = aitken_limit(deltas, noise=budget)
    if bounds:
        phi0x = minimize_free_time(sys, np.zeros_like(x), x, opts)
        upper, lower = phi0x.value, -phi0x.value
        budget += phi0x.discretization_error
        u = min(u, upper)
    else:
        upper, lower = math.inf, -math.inf
    return BusemannEstimate(list(schedule), deltas, errors, u, monotone, upper, lower, budget)


@dataclass
class SubsolutionReport:
    margins: list[float]
    budgets: list[float]

    @property
    def violations(self) -> int:
        return sum(m < -b for m, b in zip(self.margins, self.budgets))

    @property
    def ok(self) -> bool:
        return self.violations == 0


def subsolution_check(samples) -> SubsolutionReport:
    """Check ``u(x) - u(y) <= phi(y, x) + budget`` for ``(u_x, u_y, phi_yx, budget)`` tuples."""
    margins, budgets = [], []
    for u_x, u_y, phi_yx, budget in samples:
        margins.append(phi_yx - (u_x - u_y))
        budgets.append(budget)
    return SubsolutionReport(margins, budgets)


def subsolution_sweep(sys, hm, pairs, schedule, opts=None) -> SubsolutionReport:
    """Evaluate u at both ends of every pair, ``phi(y, x)``, and run `subsolution_check`."""
    rows = []
    for x, y in pairs:
        ux = busemann_value(sys, hm, x, schedule, opts, bounds=False)
        uy = busemann_value(sys, hm, y, schedule, opts, bounds=False)
        p = minimize_free_time(sys, y, x, opts)
        rows.append((ux.u_value, uy.u_value, p.value, ux.budget + uy.budget + p.discretization_error))
    return subsolution_check(rows)


@dataclass
class HJReport:
    x: np.ndarray
    gradient: np.ndarray
    dual_norm_sq: float
    two_U: float
    residual: float
    fd_step: float


def hj_residual(
    sys, hm: HomotheticMotion, x, fd_step: float = 1e-3, schedule=(1e3,), opts: MinimizeOptions | None = None
) -> HJReport:
    """Relative residual ``| ||Du||_*^2 - 2U | / 2U`` with Du from central differences of u."""
    x = sys.check(x)
    jobs = []
    for idx in np.ndindex(*x.shape):
        for sgn in (1, -1):
            xp = x.copy()
            xp[idx] += sgn * fd_step
            if not all(horizon_ok(sys, hm, xp, t) for t in schedule):
                raise HorizonError(f"stencil point {idx}{'+-'[sgn < 0]} violates the horizon condition")
            jobs.append((sys, hm, xp, tuple(schedule), opts))
    vals = pmap(_u_job, jobs)
    grad = np.zeros_like(x)
    for k, idx in enumerate(np.ndindex(*x.shape)):
        grad[idx] = (vals[2 * k] - vals[2 * k + 1]) / (2 * fd_step)
    dn2 = dual_norm(sys, grad) ** 2
    twoU = 2 * potential(sys, x)
    return HJReport(x, grad, dn2, twoU, abs(dn2 - twoU) / twoU, fd_step)


def _u_job(args):
    sys, hm, x, schedule, opts = args
    return busemann_value(sys, hm, x, schedule, opts, bounds=False).u_value


@dataclass
class HorizonResult:
    T: float
    tau: float
    value: float
    error: float
    trajectory: Trajectory = field(repr=False)
    times: np.ndarray = field(repr=False)
    r_T: np.ndarray = field(repr=False)
    theta_T: np.ndarray = field(repr=False)
    defect: np.ndarray = field(repr=False)
    defect_third: np.ndarray = field(repr=False)


@dataclass
class CalibrationReport:
    x: np.ndarray
    horizons: list[float]
    results: list[HorizonResult]
    restriction_time: float
    cauchy: list[float]
    defect_times: list[float] = field(default_factory=list)
    calibration_defect: list[float] = field(default_factory=list)
    calibration_budget: list[float] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)


def _asymptotics(sys, hm, traj: Trajectory, times):
    r, th, de, de3 = [], [], [], []
    cx0 = hm.c * hm.x0
    for t in times:
        y = traj.at(t)
        ny = mass_norm(sys, y)
        r.append(ny * t ** (-2.0 / 3.0))
        cosang = mass_inner(sys, y, hm.x0) / (ny * mass_norm(sys, hm.x0)) if ny > 0 else 1.0
        th.append(math.acos(max(-1.0, min(1.0, cosang))))
        de.append(mass_norm(sys, y * t ** (-2.0 / 3.0) - cx0))
        de3.append(mass_norm(sys, y * t ** (-1.0 / 3.0) - cx0))
    return np.array(r), np.array(th), np.array(de), np.array(de3)


def sub_action(sys, traj: Trajectory, t: float) -> float:
    """Discrete action of the trajectory restricted to ``[0, t]``."""
    k = int(np.searchsorted(traj.knots, t, side="left"))
    if k < len(traj.knots) and abs(traj.knots[k] - t) <= 1e-12 * max(1.0, t):
        sub = traj.restrict(0, k)
    else:
        knots = np.append(traj.knots[:k], t)
        pts = np.concatenate([traj.points[:k], traj.at(t)[None]])
        sub = Trajectory(knots, pts)
    return discrete_action(sys, sub)


def calibrating_curve(
    sys,
    hm: HomotheticMotion,
    x,
    horizons,
    opts: MinimizeOptions | None = None,
    sample_times=None,
    restriction_time: float = 10.0,
    defect_times=(),
    defect_schedule=None,
) -> CalibrationReport:
    """Free-time minimizers from x to ``g(T)`` for each horizon, with asymptotic tables.

    ``cauchy[j]`` is the sup mass-norm distance on ``[0, restriction_time]``
    between the minimizers for horizons j and j+1. ``calibration_defect`` is
    ``u(a(t)) - u(x) - A(a|[0, t])`` along the minimizer of the last horizon.
    """
    x = sys.check(x)
    horizons = list(horizons)
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ValueError("horizons must be increasing")
    if not horizon_ok(sys, hm, x, horizons[0]):
        raise HorizonError("first horizon too short")
    results, failures = [], []
    for T in horizons:
        try:
            est = minimize_free_time(sys, x, homothetic(hm, T), opts)
        except Exception as exc:  # partial report on solver failure
            failures.append(f"T={T}: {exc}")
            continue
        traj = est.trajectory
        tau = est.duration
        if sample_times is None:
            ts = np.geomspace(min(1.0, tau / 4), tau / 2, 24)
        else:
            ts = np.asarray([t for t in sample_times if 0 < t <= tau], dtype=float)
        r, th, de, de3 = _asymptotics(sys, hm, traj, ts)
        results.append(HorizonResult(T, tau, est.value, est.discretization_error, traj, ts, r, th, de, de3))
    cauchy = []
    for a, b in zip(results, results[1:]):
        tc = min(restriction_time, a.tau, b.tau)
        grid = np.union1d(a.trajectory.knots[a.trajectory.knots <= tc], b.trajectory.knots[b.trajectory.knots <= tc])
        cauchy.append(max(mass_norm(sys, a.trajectory.at(t) - b.trajectory.at(t)) for t in grid))
    report = CalibrationReport(x, horizons, results, restriction_time, cauchy, failures=failures)
    if defect_times and results:
        alpha = results[-1].trajectory
        times = [float(t) for t in defect_times if t <= alpha.duration]
        pts = [alpha.at(t) for t in times]
        if defect_schedule is None:
            far = max([x] + pts, key=lambda p: mass_norm(sys, p))
            defect_schedule = default_schedule(sys, hm, far)
        u_x = busemann_value(sys, hm, x, defect_schedule, opts, bounds=False)
        for t, y in zip(times, pts):
            u_y = busemann_value(sys, hm, y, defect_schedule, opts, bounds=False)
            report.defect_times.append(t)
            report.calibration_defect.append(u_y.u_value - u_x.u_value - sub_action(sys, alpha, t))
            report.calibration_budget.append(u_x.budget + u_y.budget + results[-1].error)
    return report


def horizon_row(sys, hm, result: HorizonResult, t: float) -> tuple[float, float, float]:
    """(r_T(t), theta_T(t), defect(t)) for one horizon at time t."""
    r, th, de, _ = _asymptotics(sys, hm, result.trajectory, np.array([t]))
    return float(r[0]), float(th[0]), float(de[0])


def time_ratio_check(report: CalibrationReport) -> list[dict]:
    """Per-horizon ``tau_T / T`` with an audit of ``T / tau_T <= 8/3``."""
    rows = []
    for res in report.results:
        rows.append(
            {
                "T": res.T,
                "tau": res.tau,
                "tau_over_T": res.tau / res.T,
                "T_over_tau": res.T / res.tau,
                "within_limsup_bound": res.T / res.tau <= 8.0 / 3.0,
            }
        )
    return rows


def asymptotic_check(report: CalibrationReport) -> list[dict]:
    """Defect ``||y_T(t) t^(-2/3) - c x0||`` per horizon and sample time.

    The ``t^(-1/3)`` normalization is tabulated alongside for comparison.
    """
    rows = []
    for res in report.results:
        for t, r, th, de, de3 in zip(res.times, res.r_T, res.theta_T, res.defect, res.defect_third):
            rows.append(
                {"T": res.T, "t": float(t), "r_T": float(r), "theta_T": float(th), "defect": float(de), "defect_third": float(de3)}
            )
    return rows
