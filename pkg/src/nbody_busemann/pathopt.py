"""Discretized action minimization for fixed-time and free-time potentials.

Paths are piecewise linear in time on a knot grid. The discrete action is

    sum_k  ||x_{k+1} - x_k||^2 / (2 dt_k)  +  dt_k (U(x_k) + U(x_{k+1})) / 2

with the kinetic term exact for the linear pieces. An endpoint at the total
collision ``x = 0`` uses the local homothetic model on its segment: the piece
``x_1 (t/t_1)^(2/3)`` contributes ``(2/3)||x_1||^2 / t_1 + 3 t_1 U(x_1)``.

Knots are uniform in ``(t + t_off)^(1/6)``, where ``t_off`` is the parabolic
age of the start point. Near the total collision the potential grows like
``t^(-2/3)``; cube-root grading leaves the trapezoid with first-order error
there, sixth-root grading restores (nearly) second order.

Interior knots are optimized by damped Newton steps on the block-tridiagonal
Hessian, with a Levenberg shift when it is not positive definite and
backtracking on the action.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded
from scipy.optimize import minimize_scalar

from .core import CollisionError, min_distance_batch
from ._parallel import pmap

log = logging.getLogger(__name__)

SINGULAR_KINETIC = 4.0 / 3.0
SINGULAR_POTENTIAL = 3.0


class OptimizationError(RuntimeError):
    pass


class BracketError(OptimizationError):
    def __init__(self, message, profile):
        super().__init__(message)
        self.profile = profile


@dataclass(frozen=True)
class Trajectory:
    knots: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        points = np.asarray(self.points, dtype=float)
        if knots.ndim != 1 or len(knots) < 2:
            raise ValueError("need at least two knots")
        if points.shape[0] != len(knots) or points.ndim != 3:
            raise ValueError("points must have shape (M+1, N, d)")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knot times must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "points", points)

    @property
    def segments(self) -> int:
        return len(self.knots) - 1

    @property
    def duration(self) -> float:
        return float(self.knots[-1] - self.knots[0])

    def at(self, t: float) -> np.ndarray:
        """Configuration at time t (linear interpolation between knots)."""
        t0, t1 = self.knots[0], self.knots[-1]
        if not t0 - 1e-12 <= t <= t1 + 1e-12:
            raise ValueError(f"t={t} outside [{t0}, {t1}]")
        k = int(np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, self.segments - 1))
        lam = (t - self.knots[k]) / (self.knots[k + 1] - self.knots[k])
        return (1 - lam) * self.points[k] + lam * self.points[k + 1]

    def restrict(self, i: int, j: int) -> Trajectory:
        return Trajectory(self.knots[i : j + 1], self.points[i : j + 1])

    def reversed(self) -> Trajectory:
        T = self.knots[-1]
        return Trajectory((T - self.knots[::-1]) + self.knots[0], self.points[::-1].copy())

    def shifted(self, t0: float) -> Trajectory:
        return Trajectory(self.knots - self.knots[0] + t0, self.points)


@dataclass(frozen=True)
class MinimizeOptions:
    segments: int = 96
    max_iterations: int = 200
    gradient_tolerance: float = 1e-9
    refinement_levels: int = 1
    restarts: int = 3
    rng_seed: int = 0
    collision_floor: float = 1e-6
    perturbation: float = 0.05
    scan_points: int = 12
    scan_range: tuple[float, float] = (0.05, 20.0)
    log_time_tolerance: float = 1e-7

    def __post_init__(self):
        if self.segments < 2 or self.max_iterations < 1 or self.restarts < 1:
            raise ValueError("segments >= 2, max_iterations >= 1, restarts >= 1 required")
        if not self.gradient_tolerance > 0 or self.refinement_levels < 0:
            raise ValueError("gradient_tolerance must be positive, refinement_levels >= 0")


@dataclass
class PotentialEstimate:
    value: float
    trajectory: Trajectory | None
    discretization_error: float
    converged: bool
    gradient_norm: float = 0.0
    duration: float = 0.0
    level_values: list[float] = field(default_factory=list)
    scan: list[tuple[float, float]] = field(default_factory=list)


def _is_total_collision(x) -> bool:
    return not np.any(x)


def parabolic_age(sys, x) -> float:
    """Time a zero-energy homothetic arc needs to reach ``||x||`` from collision."""
    if _is_total_collision(x):
        return 0.0
    rho = math.sqrt(float(np.einsum("i,id,id->", sys.m, x, x)))
    U = float(sys.potential_batch(x[None])[0])
    if not np.isfinite(U):
        raise CollisionError("endpoint at a partial collision")
    return rho * math.sqrt(2.0 / U) / 3.0


GRADING = 6.0


def time_grid(T: float, segments: int, t_off: float, grading: float | None = None) -> np.ndarray:
    """Knots on ``[0, T]``, uniform in ``(t + t_off)^(1/p)``."""
    p = grading or GRADING
    z = np.linspace(t_off ** (1 / p), (T + t_off) ** (1 / p), segments + 1)
    t = z**p - t_off
    t[0], t[-1] = 0.0, T
    return t


class _Problem:
    """Discrete action on a fixed knot grid with fixed endpoints."""

    def __init__(self, sys, x, y, knots):
        self.sys = sys
        self.x, self.y = np.asarray(x, float), np.asarray(y, float)
        self.t = np.asarray(knots, float)
        self.dt = np.diff(self.t)
        M = len(self.dt)
        self.kf = np.ones(M)
        self.q = np.zeros(M + 1)
        self.q[:-1] += self.dt / 2
        self.q[1:] += self.dt / 2
        self.sing_start = _is_total_collision(self.x)
        self.sing_end = _is_total_collision(self.y)
        if self.sing_start and self.sing_end:
            raise ValueError("both endpoints at the total collision")
        if self.sing_start:
            self.kf[0] = SINGULAR_KINETIC
            self.q[0] = 0.0
            self.q[1] = SINGULAR_POTENTIAL * self.dt[0] + self.dt[1] / 2 if M > 1 else 0.0
        if self.sing_end:
            self.kf[-1] = SINGULAR_KINETIC
            self.q[-1] = 0.0
            self.q[-2] = SINGULAR_POTENTIAL * self.dt[-1] + (self.dt[-2] / 2 if M > 1 else 0.0)
        self.w = sys.weights
        self.n = self.w.size
        self.shape = (M - 1,) + self.x.shape

    def full(self, Z):
        return np.concatenate([self.x[None], Z.reshape(self.shape), self.y[None]])

    def action(self, Z, floor=0.0):
        X = self.full(Z)
        if floor > 0 and min_distance_batch(self.sys, X[1:-1], relative=True).min(initial=np.inf) < floor:
            return np.inf
        dX = np.diff(X, axis=0).reshape(len(self.dt), -1)
        kin = np.sum(self.kf * np.einsum("ka,a,ka->k", dX, self.w, dX) / (2 * self.dt))
        U = self.sys.potential_batch(X[1:-1])
        pot = np.dot(self.q[1:-1], U)
        for idx in (0, -1):
            if self.q[idx] > 0:
                pot += self.q[idx] * float(self.sys.potential_batch(X[idx][None])[0])
        return float(kin + pot)

    def gradient(self, Z, with_scale=False):
        X = self.full(Z).reshape(len(self.t), -1)
        dX = np.diff(X, axis=0) * (self.kf / self.dt)[:, None] * self.w
        F = self.q[1:-1, None] * self.sys.gradient_batch(X[1:-1].reshape(self.shape)).reshape(len(X) - 2, -1)
        G = dX[:-1] - dX[1:] + F
        if not with_scale:
            return G
        scale = self._dual(dX[:-1]) + self._dual(dX[1:]) + self._dual(F)
        return G, scale

    def _dual(self, P):
        return np.sqrt(np.sum(P * P / self.w, axis=1))

    def residual_norm(self, G, scale):
        """Largest per-knot Euler-Lagrange residual relative to the force scale there."""
        return float(np.max(self._dual(G) / np.where(scale > 0, scale, 1.0)))

    def banded_hessian(self, Z):
        X = self.full(Z)
        P, n = len(self.t) - 2, self.n
        Hu = self.sys.hessian_batch(X[1:-1]) * self.q[1:-1, None, None]
        stiff = self.kf / self.dt
        diag = (stiff[:-1] + stiff[1:])[:, None] * self.w[None, :]
        Hu[:, np.arange(n), np.arange(n)] += diag
        ab = np.zeros((n + 1, P * n))
        for a in range(n):
            for b in range(a, n):
                ab[n + a - b, b::n] = Hu[:, a, b]
        off = -(stiff[1:-1, None] * self.w[None, :]).ravel()
        ab[0, n:] = off
        return ab


def _newton(prob: _Problem, Z0, opts: MinimizeOptions):
    Z = np.array(Z0, dtype=float).reshape(-1)
    A = prob.action(Z, opts.collision_floor)
    if not np.isfinite(A):
        raise CollisionError("initial path hits the collision floor")
    gnorm = np.inf
    n = prob.n
    for it in range(opts.max_iterations):
        G, scale = prob.gradient(Z, with_scale=True)
        gnorm = prob.residual_norm(G, scale)
        if gnorm <= opts.gradient_tolerance:
            return Z, A, gnorm, True, it
        g = G.ravel()
        ab = prob.banded_hessian(Z)
        scale = float(np.mean(np.abs(ab[n])))
        shift, d = 0.0, None
        for _ in range(40):
            trial = ab.copy()
            trial[n] += shift
            try:
                cb = cholesky_banded(trial, lower=False, check_finite=False)
                d = -cho_solve_banded((cb, False), g, check_finite=False)
                break
            except LinAlgError:
                shift = max(2 * shift, 1e-10 * scale)
        if d is None:
            d = -g / prob.w[np.arange(g.size) % n]
        slope = float(g @ d)
        if slope >= 0:
            d, slope = -g / ab[n], -float(g @ (g / ab[n]))
        # predicted decrease below the rounding level of A: nothing left to gain
        at_precision = -slope <= 20 * np.finfo(float).eps * max(1.0, abs(A))
        step = 1.0
        for _ in range(60):
            Znew = Z + step * d
            Anew = prob.action(Znew, opts.collision_floor)
            if Anew <= A + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            return Z, A, gnorm, at_precision, it
        Z, A = Znew, Anew
        if at_precision:
            gnorm = prob.residual_norm(*prob.gradient(Z, with_scale=True))
            return Z, A, gnorm, True, it + 1
    gnorm = prob.residual_norm(*prob.gradient(Z, with_scale=True))
    return Z, A, gnorm, gnorm <= opts.gradient_tolerance, opts.max_iterations


def _straight_init(sys, x, y, knots, t_off, restart, opts):
    T = knots[-1]
    e = 2.0 / 3.0
    lam = ((knots + t_off) ** e - t_off**e) / ((T + t_off) ** e - t_off**e)
    X = (1 - lam)[:, None, None] * x + lam[:, None, None] * y
    dist = min_distance_batch(sys, X[1:-1], relative=True).min(initial=np.inf)
    if restart == 0 and dist > 10 * opts.collision_floor:
        return X[1:-1]
    rng = np.random.default_rng([opts.rng_seed, restart])
    v = rng.normal(size=x.shape)
    d = y - x
    w = sys.m[:, None]
    dd = float(np.sum(w * d * d))
    if dd > 0:
        v -= float(np.sum(w * v * d)) / dd * d
    vn = math.sqrt(float(np.sum(w * v * v)))
    size = math.sqrt(dd) if dd > 0 else 1.0
    amp = opts.perturbation * max(restart, 1) * size / vn
    X = X + amp * np.sin(np.pi * lam)[:, None, None] * v
    return X[1:-1]


def _orient(sys, x, y):
    """Start from the endpoint with the smaller parabolic age."""
    ax, ay = parabolic_age(sys, x), parabolic_age(sys, y)
    if ay < ax:
        return y, x, ay, True
    return x, y, ax, False


def _refine_interior(X_full, knots_coarse, knots_fine):
    out = np.empty((len(knots_fine),) + X_full.shape[1:])
    flat = X_full.reshape(len(knots_coarse), -1)
    for j in range(flat.shape[1]):
        out.reshape(len(knots_fine), -1)[:, j] = np.interp(knots_fine, knots_coarse, flat[:, j])
    return out[1:-1]


def _solve_on_grid(sys, x, y, T, t_off, segments, Z0, opts):
    knots = time_grid(T, segments, t_off)
    prob = _Problem(sys, x, y, knots)
    Z, A, gnorm, ok, _ = _newton(prob, Z0, opts)
    return prob, Z, A, gnorm, ok


def _single_restart(args):
    sys, x, y, T, t_off, opts, restart = args
    knots = time_grid(T, opts.segments, t_off)
    Z0 = _straight_init(sys, x, y, knots, t_off, restart, opts)
    try:
        prob, Z, A, gnorm, ok = _solve_on_grid(sys, x, y, T, t_off, opts.segments, Z0, opts)
    except CollisionError:
        return restart, np.inf, None, np.inf, False
    return restart, A, Z, gnorm, ok


def _richardson(sys, x, y, T, t_off, Z, A, gnorm, ok, opts):
    values = [A]
    segments = opts.segments
    knots = time_grid(T, segments, t_off)
    prob = _Problem(sys, x, y, knots)
    for _ in range(opts.refinement_levels):
        fine = time_grid(T, 2 * segments, t_off)
        Z0 = _refine_interior(prob.full(Z), knots, fine)
        prob, Z, A, gnorm, ok_level = _solve_on_grid(sys, x, y, T, t_off, 2 * segments, Z0, opts)
        ok = ok and ok_level
        values.append(A)
        segments, knots = 2 * segments, fine
    if len(values) >= 2:
        correction = (values[-1] - values[-2]) / 3.0
        value, err = values[-1] + correction, abs(correction)
    else:
        value, err = values[-1], math.inf
    traj = Trajectory(knots, prob.full(Z))
    return value, err, traj, gnorm, ok, values


def minimize_fixed_time(sys, x, y, T: float, opts: MinimizeOptions | None = None) -> PotentialEstimate:
    """Estimate ``phi(x, y; T)``, the least action over paths from x to y lasting T."""
    opts = opts or MinimizeOptions()
    if not T > 0:
        raise ValueError("T must be positive")
    x, y = sys.check(x), sys.check(y)
    a, b, t_off, flipped = _orient(sys, x, y)
    jobs = [(sys, a, b, T, t_off, opts, r) for r in range(opts.restarts)]
    results = pmap(_single_restart, jobs)
    best = min(results, key=lambda r: (r[1], r[0]))
    if not np.isfinite(best[1]):
        raise OptimizationError("all restarts were trapped at the collision floor")
    _, A, Z, gnorm, ok = best
    value, err, traj, gnorm, ok, values = _richardson(sys, a, b, T, t_off, Z, A, gnorm, ok, opts)
    if flipped:
        traj = traj.reversed()
    if not ok:
        log.warning("fixed-time minimization not converged (residual %.3e)", gnorm)
    return PotentialEstimate(value, traj, err, ok, gnorm, T, values)


def parabolic_time_scale(sys, x, y) -> float:
    """``(2 ||x - y||^3 / U_dir)^(1/2) / 3`` with U_dir the potential of the unit chord."""
    d = y - x
    rho = math.sqrt(float(np.einsum("i,id,id->", sys.m, d, d)))
    candidates = []
    for z in (d, x, y):
        nz = math.sqrt(float(np.einsum("i,id,id->", sys.m, z, z)))
        if nz > 0:
            U = float(sys.potential_batch((z / nz)[None])[0])
            if np.isfinite(U):
                candidates.append(U)
                break
    if not candidates:
        raise CollisionError("no finite potential scale for the time scan")
    return math.sqrt(2 * rho**3 / candidates[0]) / 3.0


def minimize_free_time(sys, x, y, opts: MinimizeOptions | None = None, time_scale: float | None = None) -> PotentialEstimate:
    """Estimate ``phi(x, y) = inf_T phi(x, y; T)`` and the optimal duration.

    A geometric scan of durations brackets the minimum, Brent's method refines
    it in ``log T`` (re-optimizing the path at every trial duration), and the
    final path is refined for the Richardson error estimate.
    """
    opts = opts or MinimizeOptions()
    x, y = sys.check(x), sys.check(y)
    if np.array_equal(x, y):
        return PotentialEstimate(0.0, None, 0.0, True, 0.0, 0.0)
    a, b, t_off, flipped = _orient(sys, x, y)
    Tk = time_scale or parabolic_time_scale(sys, a, b)
    lo, hi = opts.scan_range
    grid = list(np.geomspace(lo * Tk, hi * Tk, opts.scan_points))

    cache = {}
    warm = {}

    def profile(T):
        if T in cache:
            return cache[T][0]
        knots = time_grid(T, opts.segments, t_off)
        best = None
        starts = []
        if warm.get("Z") is not None:
            starts.append(("warm", warm["Z"]))
        starts += [(r, None) for r in range(opts.restarts)]
        for tag, Z0 in starts:
            if Z0 is None:
                Z0 = _straight_init(sys, a, b, knots, t_off, tag, opts)
            try:
                _, Z, A, gnorm, ok = _solve_on_grid(sys, a, b, T, t_off, opts.segments, Z0, opts)
            except CollisionError:
                continue
            if best is None or A < best[0]:
                best = (A, Z, gnorm, ok)
            if tag == "warm" and ok:
                break
        if best is None:
            cache[T] = (np.inf, None, np.inf, False)
            return np.inf
        cache[T] = best
        warm["Z"] = best[1]
        return best[0]

    values = [profile(T) for T in grid]
    for _ in range(12):
        i = int(np.argmin(values))
        if 0 < i < len(grid) - 1:
            break
        if i == 0:
            grid.insert(0, grid[0] / 4)
            warm["Z"] = cache[grid[1]][1]
            values.insert(0, profile(grid[0]))
        else:
            grid.append(grid[-1] * 4)
            warm["Z"] = cache[grid[-2]][1]
            values.append(profile(grid[-1]))
    else:
        raise BracketError("duration scan did not bracket the minimum", list(zip(grid, values)))
    i = int(np.argmin(values))
    warm["Z"] = cache[grid[i]][1]
    res = minimize_scalar(
        lambda s: profile(math.exp(s)),
        bounds=(math.log(grid[i - 1]), math.log(grid[i + 1])),
        method="bounded",
        options={"xatol": opts.log_time_tolerance, "maxiter": 200},
    )
    T_best = min(cache, key=lambda T: cache[T][0])
    A, Z, gnorm, ok = cache[T_best]
    value, err, traj, gnorm, ok, level_values = _richardson(sys, a, b, T_best, t_off, Z, A, gnorm, ok, opts)
    if flipped:
        traj = traj.reversed()
    scan = sorted((T, v[0]) for T, v in cache.items())
    return PotentialEstimate(value, traj, err, ok and res.success, gnorm, T_best, level_values, scan)


def discrete_action(sys, traj: Trajectory) -> float:
    """Discrete action of a piecewise-linear trajectory; ``inf`` at a partial collision.

    An endpoint at the total collision uses the homothetic local model on its segment.
    """
    X = traj.points
    prob = _Problem(sys, X[0], X[-1], traj.knots)
    if traj.segments < 2:
        # single segment: no interior knots
        dX = (X[1] - X[0]).reshape(-1)
        kin = prob.kf[0] * float(np.sum(prob.w * dX * dX)) / (2 * prob.dt[0])
        pot = sum(
            prob.q[i] * float(sys.potential_batch(X[i][None])[0]) for i in (0, 1) if prob.q[i] > 0
        )
        if prob.sing_start or prob.sing_end:
            other = X[1] if prob.sing_start else X[0]
            pot = SINGULAR_POTENTIAL * prob.dt[0] * float(sys.potential_batch(other[None])[0])
        return kin + pot
    return prob.action(X[1:-1].reshape(-1))


def segment_energies(sys, traj: Trajectory) -> np.ndarray:
    """Kinetic minus mean potential per segment; near zero on free-time minimizers."""
    X = traj.points
    dt = np.diff(traj.knots)
    dX = np.diff(X, axis=0)
    kin = np.einsum("kid,i,kid->k", dX, sys.m, dX) / (2 * dt**2)
    U = sys.potential_batch(X)
    return kin - (U[:-1] + U[1:]) / 2


def with_options(opts: MinimizeOptions | None, **changes) -> MinimizeOptions:
    return replace(opts or MinimizeOptions(), **changes)


# --- property checks -------------------------------------------------------
#
# The Hölder constant eta and the Maderna pair (alpha, beta) are existential.
# They are fitted once on seeded calibration families for the unit-mass
# planar three-body system and frozen below; the checks then use them on
# disjoint test families.

CALIBRATION_SEED = 101
FROZEN_ETA = 5.531  # fit_holder_eta on holder_pairs(rng(101), 40, with_origin=10), rounded up
FROZEN_MADERNA = (1.603, 5.069)  # fit_maderna on maderna_cases(rng(101), 400), rounded up


def random_configuration(sys, rng, radius: float = 1.0, center=None) -> np.ndarray:
    """Centered configuration with norm uniform in ``[0.2, 1] * radius``, shifted to ``center``."""
    while True:
        x = rng.normal(size=sys.shape)
        x = x - sys.m @ x / sys.m.sum()
        x *= radius * rng.uniform(0.2, 1.0) / math.sqrt(float(np.einsum("i,id,id->", sys.m, x, x)))
        if center is not None:
            x = x + center
        if min_distance_batch(sys, x[None], relative=False)[0] > 1e-2 * radius:
            return x


@dataclass
class PropertyReport:
    name: str
    margins: list[float]
    budgets: list[float]
    detail: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return sum(m < -b for m, b in zip(self.margins, self.budgets))

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _phi_job(args):
    sys, x, y, opts = args
    est = minimize_free_time(sys, x, y, opts)
    return est.value, est.discretization_error


def triangle_check(sys, triples, opts=None) -> PropertyReport:
    """``phi(x,z) <= phi(x,y) + phi(y,z) + 3 * (sum of discretization errors)``."""
    jobs = []
    for x, y, z in triples:
        jobs += [(sys, x, z, opts), (sys, x, y, opts), (sys, y, z, opts)]
    vals = pmap(_phi_job, jobs)
    margins, budgets = [], []
    for k in range(len(triples)):
        (xz, e1), (xy, e2), (yz, e3) = vals[3 * k : 3 * k + 3]
        margins.append(xy + yz - xz)
        budgets.append(3 * (e1 + e2 + e3))
    return PropertyReport("triangle", margins, budgets)


def symmetry_check(sys, pairs, opts=None) -> PropertyReport:
    """``|phi(x,y) - phi(y,x)|`` within the combined discretization error."""
    jobs = []
    for x, y in pairs:
        jobs += [(sys, x, y, opts), (sys, y, x, opts)]
    vals = pmap(_phi_job, jobs)
    margins, budgets = [], []
    for k in range(len(pairs)):
        (a, ea), (b, eb) = vals[2 * k], vals[2 * k + 1]
        budgets.append(ea + eb + 1e-9 * max(1.0, abs(a)))
        margins.append(-abs(a - b))
    return PropertyReport("symmetry", margins, budgets)


def holder_ratios(sys, pairs, opts=None) -> list[tuple[float, float, float]]:
    """(phi(y,z), discretization error, ||y - z||^(1/2)) per pair."""
    vals = pmap(_phi_job, [(sys, y, z, opts) for y, z in pairs])
    out = []
    for (y, z), (v, e) in zip(pairs, vals):
        d = math.sqrt(float(np.einsum("i,id,id->", sys.m, y - z, y - z)))
        out.append((v, e, math.sqrt(d)))
    return out


def fit_holder_eta(sys, pairs, opts=None) -> float:
    """Smallest eta with ``phi(y,z) <= eta ||y-z||^(1/2)`` on the calibration pairs."""
    return max(v / s for v, _, s in holder_ratios(sys, pairs, opts) if s > 0)


def holder_check(sys, pairs, eta: float, opts=None) -> PropertyReport:
    rows = holder_ratios(sys, pairs, opts)
    return PropertyReport("holder", [eta * s - v for v, _, s in rows], [e for _, e, _ in rows], {"eta": eta})


def _fixed_job(args):
    sys, x, y, T, opts = args
    est = minimize_fixed_time(sys, x, y, T, opts)
    return est.value, est.discretization_error


def maderna_terms(sys, cases, opts=None) -> list[tuple[float, float, float, float]]:
    """(phi(x,y;T), error, R^2/T, T/R) for ``(x, y, T, R)`` cases."""
    vals = pmap(_fixed_job, [(sys, x, y, T, opts) for x, y, T, _ in cases])
    return [(v, e, R * R / T, T / R) for (_, _, T, R), (v, e) in zip(cases, vals)]


def fit_maderna(sys, cases, opts=None) -> tuple[float, float]:
    """Minimize ``alpha + beta`` subject to the bound on every calibration case (a linear program)."""
    from scipy.optimize import linprog

    rows = maderna_terms(sys, cases, opts)
    A_ub = [[-a, -b] for _, _, a, b in rows]
    b_ub = [-v for v, _, _, _ in rows]
    res = linprog([1.0, 1.0], A_ub=A_ub, b_ub=b_ub, bounds=[(0, None), (0, None)], method="highs")
    if not res.success:
        raise OptimizationError(f"Maderna fit failed: {res.message}")
    return float(res.x[0]), float(res.x[1])


def maderna_check(sys, cases, alpha: float, beta: float, opts=None) -> PropertyReport:
    rows = maderna_terms(sys, cases, opts)
    margins = [alpha * a + beta * b - v for v, _, a, b in rows]
    return PropertyReport("maderna", margins, [e for _, e, _, _ in rows], {"alpha": alpha, "beta": beta})


def holder_pairs(sys, rng, count: int, radius: float = 2.0, with_origin: int = 0) -> list:
    """Random pairs in a ball; the first ``with_origin`` pairs start at the total collision."""
    pairs = []
    for k in range(count):
        z = random_configuration(sys, rng, radius)
        if k < with_origin:
            y = np.zeros(sys.shape)
        else:
            scale = radius * 10 ** rng.uniform(-2, 0)
            y = z + random_configuration(sys, rng, scale)
            if min_distance_batch(sys, y[None], relative=False)[0] < 1e-2 * radius:
                y = random_configuration(sys, rng, radius)
        pairs.append((y, z))
    return pairs


def refit_frozen_constants(sys, opts=None) -> dict:
    """Recompute the fitted constants from the seeded calibration families."""
    rng = np.random.default_rng(CALIBRATION_SEED)
    eta = fit_holder_eta(sys, holder_pairs(sys, rng, 40, with_origin=10), opts)
    rng = np.random.default_rng(CALIBRATION_SEED)
    alpha, beta = fit_maderna(sys, maderna_cases(sys, rng, 400), opts)
    return {"eta": eta, "alpha": alpha, "beta": beta}


def maderna_cases(sys, rng, count: int) -> list:
    """``(x, y, T, R)`` with x, y in a ball of radius R and ``T / R^(3/2)`` log-uniform in [0.1, 10]."""
    cases = []
    for _ in range(count):
        R = 10 ** rng.uniform(-0.5, 0.5)
        center = random_configuration(sys, rng, 2.0 * R) * rng.uniform(0, 1)
        x = random_configuration(sys, rng, R, center)
        y = random_configuration(sys, rng, R, center)
        T = R**1.5 * 10 ** rng.uniform(-1, 1)
        cases.append((x, y, T, R))
    return cases
