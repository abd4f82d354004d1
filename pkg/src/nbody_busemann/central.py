"""Normal minimal central configurations by multi-start projected gradient.

The search minimizes U over ``{I(x) = 1, sum_i m_i r_i = 0}``. Iterates move
along the mass-metric gradient ``M^-1 grad U`` projected on the sphere, and
are mapped back by centering and radial rescaling. This is a heuristic for
the global minimum; it certifies criticality only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    HomotheticMotion,
    MassSystem,
    dual_norm,
    grad_potential,
    inertia,
    min_separation,
    potential,
)
from ._parallel import pmap

log = logging.getLogger(__name__)


class CentralConfigError(RuntimeError):
    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class CentralConfig:
    x0: np.ndarray
    U0: float
    residual: float
    masses: tuple[float, ...]
    dim: int

    @property
    def multiplier(self) -> float:
        return self.U0

    def to_json(self) -> dict:
        return {
            "schema": "v1",
            "positions": self.x0.tolist(),
            "masses": list(self.masses),
            "dim": self.dim,
            "U0": self.U0,
            "residual": self.residual,
        }


def criticality_residual(sys: MassSystem, x) -> float:
    """Dual norm of ``grad U + (U/I) M x``; zero exactly at central configurations."""
    x = sys.check(x)
    I = inertia(sys, x)
    if I <= 0:
        raise ValueError("configuration has zero inertia")
    g = grad_potential(sys, x)
    return dual_norm(sys, g + potential(sys, x) / I * sys.m[:, None] * x)


def _project(sys, x):
    x = x - sys.m @ x / sys.m.sum()
    return x / np.sqrt(inertia(sys, x))


def _random_start(sys, rng):
    while True:
        x = _project(sys, rng.normal(size=sys.shape))
        if min_separation(x) > 1e-3:
            return x


def _descend(sys, x, tol, max_iter):
    """Projected gradient with Barzilai-Borwein trial steps and Armijo backtracking."""
    U = potential(sys, x)
    step = 1e-2
    prev = None
    for it in range(max_iter):
        g = grad_potential(sys, x)
        # Riemannian gradient in the mass metric; tangent to com = 0 already
        d = g / sys.m[:, None] + U * x
        res = np.sqrt(inertia(sys, d))
        if res <= tol:
            return x, U, res, it, True
        if prev is not None:
            s_, y_ = x - prev[0], d - prev[1]
            sy = float(np.sum(sys.m[:, None] * s_ * y_))
            if sy > 0:
                step = float(np.sum(sys.m[:, None] * s_ * s_)) / sy
        slope = res * res
        for _ in range(60):
            xn = _project(sys, x - step * d)
            Un = potential(sys, xn)
            if Un <= U - 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            return x, U, res, it, res <= tol
        prev = (x, d)
        x, U = xn, Un
    g = grad_potential(sys, x)
    res = np.sqrt(inertia(sys, g / sys.m[:, None] + U * x))
    return x, U, res, max_iter, res <= tol


def _seed_run(args):
    sys, seed, index, tol, max_iter = args
    rng = np.random.default_rng([seed, index])
    x = _random_start(sys, rng)
    x, U, res, it, ok = _descend(sys, x, tol, max_iter)
    if ok:
        res = criticality_residual(sys, x)
        ok = res <= tol
    return {"seed_index": index, "U": U, "residual": res, "iterations": it, "converged": ok, "x": x}


def find_minimal(
    sys: MassSystem, seed_count: int = 8, rng_seed: int = 0, tol: float = 1e-10, max_iter: int = 20000
) -> CentralConfig:
    """Lowest-U certified central configuration over ``seed_count`` random starts."""
    if seed_count < 1:
        raise ValueError("seed_count must be >= 1")
    runs = pmap(_seed_run, [(sys, rng_seed, i, tol, max_iter) for i in range(seed_count)])
    good = [r for r in runs if r["converged"]]
    if not good:
        diag = [{k: v for k, v in r.items() if k != "x"} for r in runs]
        raise CentralConfigError("no seed converged to a central configuration", diag)
    best = min(good, key=lambda r: (r["U"], r["seed_index"]))
    log.info("minimal configuration U0=%.12g from seed %d", best["U"], best["seed_index"])
    return CentralConfig(best["x"], float(best["U"]), float(best["residual"]), sys.masses, sys.dim)


def homothetic_from(cc: CentralConfig) -> HomotheticMotion:
    return HomotheticMotion(cc.x0, cc.U0)


def equilateral(sys: MassSystem) -> np.ndarray:
    """Normalized equilateral triangle for three bodies (planar; zero-padded in higher d)."""
    if sys.n_bodies != 3 or sys.dim < 2:
        raise ValueError("needs three bodies in dimension >= 2")
    ang = np.array([np.pi / 2, np.pi / 2 + 2 * np.pi / 3, np.pi / 2 + 4 * np.pi / 3])
    x = np.zeros(sys.shape)
    x[:, 0], x[:, 1] = np.cos(ang), np.sin(ang)
    return _project(sys, x)
