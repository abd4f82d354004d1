"""One-dimensional Kepler problem ``L = r'^2/2 + U0/r`` on the half line.

Arcs from ``a`` to ``b >= a`` come in two kinds. A *direct* arc moves
monotonically outward. A *reflected* arc overshoots to the turning radius
``r_max = -U0/h`` and falls back to ``b``. For every duration exactly one of
them exists, and `solve_energy` selects it.

Time and action integrals are computed by adaptive quadrature after the
substitutions ``u = w^2`` (removes the ``u -> 0`` singularity) and
``u = r_max - z^2`` (removes the turning-point singularity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

Branch = Literal["direct", "reflected"]

QUAD_OPTS = dict(epsabs=0.0, epsrel=1e-13, limit=400)


class KeplerSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class Kepler1D:
    U0: float

    def __post_init__(self):
        if not self.U0 > 0:
            raise ValueError("U0 must be positive")

    @property
    def c(self) -> float:
        return (4.5 * self.U0) ** (1.0 / 3.0)


@dataclass(frozen=True)
class RadialArc:
    a: float
    b: float
    t: float
    h: float
    branch: Branch
    r_max: float  # inf for direct arcs with h >= 0
    action: float


def _direct_parts(U0, h, a, b):
    """(time, length) integrals over an outward sweep ``a -> b``.

    ``length`` is the integral of ``sqrt(2(h + U0/u))``.
    """
    if b <= a:
        return 0.0, 0.0
    if h < 0:
        R = -U0 / h
        if b > R * (1 + 1e-14):
            raise ValueError(f"energy {h} cannot reach radius {b}")
        b = min(b, R)
        m = min(max(0.5 * R, a), b)
    else:
        m = b

    t = length = 0.0
    if m > a:
        wa, wm = math.sqrt(a), math.sqrt(m)
        t += quad(lambda w: 2 * w * w / math.sqrt(2 * (h * w * w + U0)), wa, wm, **QUAD_OPTS)[0]
        length += quad(lambda w: 2 * math.sqrt(2 * (h * w * w + U0)), wa, wm, **QUAD_OPTS)[0]
    if b > m:
        zb, zm = math.sqrt(max(R - b, 0.0)), math.sqrt(R - m)
        k = math.sqrt(-2 * h)
        t += quad(lambda z: 2 * math.sqrt(R - z * z) / k, zb, zm, **QUAD_OPTS)[0]
        length += quad(lambda z: 2 * k * z * z / math.sqrt(R - z * z), zb, zm, **QUAD_OPTS)[0]
    return t, length


def _arc_parts(U0, h, a, b, branch):
    t, length = _direct_parts(U0, h, a, b)
    if branch == "reflected":
        if h >= 0:
            raise ValueError("reflected arcs need negative energy")
        R = -U0 / h
        t2, l2 = _direct_parts(U0, h, b, R)
        t += 2 * t2
        length += 2 * l2
    elif branch != "direct":
        raise ValueError(f"unknown branch {branch!r}")
    return t, length


def _check_endpoints(a, b):
    if a < 0 or b < a:
        raise ValueError(f"need 0 <= a <= b, got a={a}, b={b}")


def time_of_flight(kp: Kepler1D, h: float, a: float, b: float, branch: Branch = "direct") -> float:
    """Duration of the arc with energy ``h`` from ``a`` to ``b``."""
    _check_endpoints(a, b)
    if branch == "direct" and h < 0 and b > -kp.U0 / h * (1 + 1e-14):
        raise ValueError("direct arc with this energy turns back before b")
    return _arc_parts(kp.U0, h, a, b, branch)[0]


def _direct_time(U0, h, a, b):
    return _direct_parts(U0, h, a, b)[0]


def solve_energy(kp: Kepler1D, a: float, b: float, t: float) -> tuple[float, Branch]:
    """Energy and branch of the unique arc from ``a`` to ``b`` lasting ``t``."""
    _check_endpoints(a, b)
    if not t > 0:
        raise ValueError("t must be positive")
    if b == 0:
        raise ValueError("a = b = 0 is excluded")
    U0 = kp.U0
    h_min = -U0 / b
    t_star = _direct_time(U0, h_min, a, b) if b > a else 0.0

    if t <= t_star:
        f = lambda h: _direct_time(U0, h, a, b) - t
        hi = abs(h_min)
        while f(hi) > 0:
            hi *= 4.0
            if hi > 1e300:
                raise KeplerSolveError(f"no upper energy bracket for a={a}, b={b}, t={t}")
        if f(h_min) == 0:
            return h_min, "direct"
        try:
            h = brentq(f, h_min, hi, xtol=1e-16 * abs(h_min), rtol=4 * np.finfo(float).eps, maxiter=500)
        except (RuntimeError, ValueError) as exc:
            raise KeplerSolveError(f"direct solve failed on [{h_min}, {hi}]: {exc}") from exc
        return h, "direct"

    # reflected: parametrize by the turning radius, time increases with it
    def g(R):
        return _arc_parts(U0, -U0 / R, a, b, "reflected")[0] - t

    lo, hi = b, 2.0 * b
    while g(hi) < 0:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise KeplerSolveError(f"no turning-radius bracket for a={a}, b={b}, t={t}")
    try:
        R = brentq(g, lo, hi, xtol=1e-15 * b, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise KeplerSolveError(f"reflected solve failed on R in [{lo}, {hi}]: {exc}") from exc
    return -U0 / R, "reflected"


def solve_arc(kp: Kepler1D, a: float, b: float, t: float) -> RadialArc:
    h, branch = solve_energy(kp, a, b, t)
    _, length = _arc_parts(kp.U0, h, a, b, branch)
    r_max = -kp.U0 / h if h < 0 else math.inf
    return RadialArc(a, b, t, h, branch, r_max, length - h * t)


def action_fixed(kp: Kepler1D, a: float, b: float, t: float) -> float:
    """Action ``S(a, b; t)`` of the unique Kepler arc from ``a`` to ``b`` in time ``t``."""
    return solve_arc(kp, a, b, t).action


def action_free(kp: Kepler1D, a: float, b: float) -> float:
    """Free-time action ``sqrt(8 U0) (sqrt(b) - sqrt(a))``, realized by the zero-energy arc."""
    _check_endpoints(a, b)
    return math.sqrt(8 * kp.U0) * (math.sqrt(b) - math.sqrt(a))


def parabolic_time(kp: Kepler1D, a: float, b: float) -> float:
    """Duration of the zero-energy arc, ``(1/3) sqrt(2/U0) (b^(3/2) - a^(3/2))``."""
    return math.sqrt(2.0 / kp.U0) / 3.0 * (b**1.5 - a**1.5)


def gap_G(kp: Kepler1D, r: float) -> float:
    """``S(0, r; 1) - S(0, r)``; nonnegative, zero only at ``r = c``."""
    return action_fixed(kp, 0.0, r, 1.0) - action_free(kp, 0.0, r)


def a0_integral(k: float) -> float:
    """Integral of ``sqrt(k + 1/v)`` over ``[0, 1]``."""
    if not k > -1:
        raise ValueError("need k > -1")
    return quad(lambda w: 2 * math.sqrt(k * w * w + 1), 0.0, 1.0, epsabs=1e-15, epsrel=1e-12)[0]


def b_integral(x: float, k: float) -> float:
    """Integral of ``sqrt(k + 1/v)`` over ``[0, x^2]``."""
    ax = abs(x)
    if k * ax * ax + 1 <= 0:
        raise ValueError("integrand not real on [0, x^2]")
    return quad(lambda w: 2 * math.sqrt(k * w * w + 1), 0.0, ax, epsabs=1e-15, epsrel=1e-12)[0]


def _F(x, y, k):
    ax = abs(x)
    val = quad(lambda w: 2 * w * w / math.sqrt(1 + k * w * w), ax, 1.0, epsabs=1e-15, epsrel=1e-12)[0]
    return val - 2.0 / 3.0 * (1 + y)


def _F_k(x, k):
    ax = abs(x)
    return -quad(lambda w: w**4 / (1 + k * w * w) ** 1.5, ax, 1.0, epsabs=1e-15, epsrel=1e-12)[0]


def implicit_k(x: float, y: float, tol: float = 1e-13, max_iter: int = 50) -> float:
    """Solve ``F(x, y, k) = 0`` for k by Newton's method.

    ``F(x, y, k) = int_{x^2}^1 sqrt(v / (1 + k v)) dv - (2/3)(1 + y)``.
    """
    if not abs(x) < 1:
        raise ValueError("need |x| < 1")
    if 1 + y <= 0:
        # the integral is positive, so F has no root
        raise KeplerSolveError(f"no solution for y={y} <= -1")
    k = -10.0 / 3.0 * y
    for _ in range(max_iter):
        if 1 + k <= 0:
            raise KeplerSolveError(f"Newton left the domain 1 + k v > 0 at x={x}, y={y}")
        try:
            f = _F(x, y, k)
            if abs(f) <= tol:
                return k
            step = f / _F_k(x, k)
        except OverflowError as exc:
            raise KeplerSolveError(f"implicit_k diverged at x={x}, y={y}") from exc
        while 1 + (k - step) <= 0:
            step *= 0.5
        k -= step
    raise KeplerSolveError(f"implicit_k did not converge at x={x}, y={y} (|F|={abs(f):.3e})")


def energy_scaled(kp: Kepler1D, r: float, s: float, sigma: float) -> float:
    """Energy of the arc from r to ``c s^(2/3)`` in time ``sigma s`` via ``k(x, y)``."""
    x = math.sqrt(r / kp.c) * s ** (-1.0 / 3.0)
    return (2.0 / 9.0 * kp.U0**2) ** (1.0 / 3.0) * s ** (-2.0 / 3.0) * implicit_k(x, sigma - 1.0)


@dataclass(frozen=True)
class ExpansionCheck:
    r: float
    s: float
    sigma: float
    action: float
    main_terms: float
    residual: float

    @property
    def scaled_residual(self) -> float:
        """Residual times ``s^(1/3)``; bounded when the expansion holds."""
        return self.residual * self.s ** (1.0 / 3.0)


def action_expansion_check(kp: Kepler1D, r: float, s: float, sigma: float) -> ExpansionCheck:
    """Compare ``S(r, c s^(2/3); sigma s)`` with its large-s main terms

    ``(6 U0^2 s)^(1/3) (2 + (5/9)(sigma-1)^2) - sqrt(8 U0 r)``.
    """
    S = action_fixed(kp, r, kp.c * s ** (2.0 / 3.0), sigma * s)
    main = (6 * kp.U0**2 * s) ** (1.0 / 3.0) * (2 + 5.0 / 9.0 * (sigma - 1) ** 2) - math.sqrt(8 * kp.U0 * r)
    return ExpansionCheck(r, s, sigma, S, main, S - main)


def radial_expansion_check(kp: Kepler1D, r: float, u: float, sigma: float) -> ExpansionCheck:
    """Same comparison with endpoint ``u`` and time ``(sigma/3) sqrt(2 u^3 / U0)``.

    Main terms: ``sqrt(8 U0) (sqrt(u) (1 + (5/18)(sigma-1)^2) - sqrt(r))``.
    The reported ``s`` is the equivalent homothetic time ``(u/c)^(3/2)``.
    """
    t = sigma / 3.0 * math.sqrt(2 * u**3 / kp.U0)
    S = action_fixed(kp, r, u, t)
    main = math.sqrt(8 * kp.U0) * (math.sqrt(u) * (1 + 5.0 / 18.0 * (sigma - 1) ** 2) - math.sqrt(r))
    return ExpansionCheck(r, (u / kp.c) ** 1.5, sigma, S, main, S - main)


def quadratic_coefficient(kp: Kepler1D, r: float, s: float, dsigma: float) -> float:
    """Symmetric second difference in sigma of the action, normalized by ``(6 U0^2 s)^(1/3)``.

    Estimates the coefficient of ``(sigma - 1)^2`` (5/9 asymptotically).
    """
    b = kp.c * s ** (2.0 / 3.0)
    plus = action_fixed(kp, r, b, (1 + dsigma) * s)
    zero = action_fixed(kp, r, b, s)
    minus = action_fixed(kp, r, b, (1 - dsigma) * s)
    return (plus + minus - 2 * zero) / (2 * dsigma**2) / (6 * kp.U0**2 * s) ** (1.0 / 3.0)


def radial_quadratic_coefficient(kp: Kepler1D, r: float, u: float, dsigma: float) -> float:
    """Coefficient of ``(sigma-1)^2`` relative to ``sqrt(8 U0 u)`` (5/18 asymptotically)."""
    t0 = math.sqrt(2 * u**3 / kp.U0) / 3.0
    vals = [action_fixed(kp, r, u, (1 + e) * t0) for e in (dsigma, 0.0, -dsigma)]
    return (vals[0] + vals[2] - 2 * vals[1]) / (2 * dsigma**2) / math.sqrt(8 * kp.U0 * u)
