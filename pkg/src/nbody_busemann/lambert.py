"""Reduction of the planar Kepler two-point action to the radial problem.

Lambert's theorem says the direct arc's action depends only on the duration,
the chord and the sum of the radii. The radial arc from ``d1`` to ``d2``
has the same chord ``d2 - d1`` and radius sum ``d1 + d2``, so it has the same action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kepler import Kepler1D, action_fixed


@dataclass(frozen=True)
class PlanarPoint:
    r: float
    theta: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("radius must be nonnegative")
        if not -math.pi <= self.theta <= math.pi:
            raise ValueError("theta must lie in [-pi, pi]")

    def cartesian(self) -> np.ndarray:
        return np.array([self.r * math.cos(self.theta), self.r * math.sin(self.theta)])


@dataclass(frozen=True)
class LambertGeometry:
    d1: float
    d2: float
    chord: float


def lambert_geometry(r: float, theta: float, R: float) -> LambertGeometry:
    """Radial endpoints equivalent to ``r e^{i theta}`` and ``R`` on the positive axis."""
    if r < 0 or R < 0:
        raise ValueError("radii must be nonnegative")
    chord = math.sqrt(max(r * r + R * R - 2 * r * R * math.cos(theta), 0.0))
    d1 = max((r + R - chord) / 2, 0.0)
    d2 = (r + R + chord) / 2
    return LambertGeometry(d1, d2, chord)


def planar_action(kp: Kepler1D, r: float, theta: float, R: float, tau: float) -> float:
    """Action of the direct Kepler arc from ``r e^{i theta}`` to ``R`` in time ``tau``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    g = lambert_geometry(r, theta, R)
    return action_fixed(kp, g.d1, g.d2, tau)


@dataclass(frozen=True)
class DirectPathReport:
    direct: bool
    total_variation: float
    max_step: float


def direct_path_check(points, tol: float = 1e-6) -> DirectPathReport:
    """Total variation of the unwrapped polar angle along planar knots.

    ``points`` is a sequence of 2-vectors (or a Trajectory of one body in the
    plane). Consecutive knots must be less than pi apart in angle.
    """
    P = np.asarray(getattr(points, "points", points), dtype=float).reshape(-1, 2)
    rad = np.hypot(P[:, 0], P[:, 1])
    if np.any(rad == 0):
        raise ValueError("polar angle undefined: trajectory passes through the origin")
    ang = np.arctan2(P[:, 1], P[:, 0])
    steps = np.diff(ang)
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    if steps.size and np.max(np.abs(steps)) >= np.pi - 1e-9:
        raise ValueError("knots too sparse in angle for unwrapping; refine the trajectory")
    unwrapped = np.concatenate([[ang[0]], ang[0] + np.cumsum(steps)])
    variation = float(unwrapped.max() - unwrapped.min()) if len(unwrapped) else 0.0
    total = float(np.sum(np.abs(steps)))
    return DirectPathReport(total <= np.pi + tol, total, float(np.max(np.abs(steps), initial=0.0)))
