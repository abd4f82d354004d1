"""Action potentials and the Busemann function of the parabolic homothetic motion."""

from .core import (
    CollisionError,
    HomotheticMotion,
    KeplerSystem,
    MassSystem,
    dual_norm,
    homothetic,
    inertia,
    mass_norm,
    potential,
)
from .kepler import Kepler1D, action_fixed, action_free, gap_G, solve_arc
from .central import CentralConfig, find_minimal
from .pathopt import MinimizeOptions, PotentialEstimate, Trajectory, minimize_fixed_time, minimize_free_time
from .lambert import lambert_geometry, planar_action
from .busemann import BusemannEstimate, CalibrationReport, busemann_value, calibrating_curve, delta, hj_residual

__all__ = [
    "BusemannEstimate",
    "CalibrationReport",
    "CentralConfig",
    "CollisionError",
    "HomotheticMotion",
    "Kepler1D",
    "KeplerSystem",
    "MassSystem",
    "MinimizeOptions",
    "PotentialEstimate",
    "Trajectory",
    "action_fixed",
    "action_free",
    "busemann_value",
    "calibrating_curve",
    "delta",
    "dual_norm",
    "find_minimal",
    "gap_G",
    "hj_residual",
    "homothetic",
    "inertia",
    "lambert_geometry",
    "mass_norm",
    "minimize_fixed_time",
    "minimize_free_time",
    "planar_action",
    "potential",
    "solve_arc",
]
