"""Masses, Newtonian potential, Lagrangian and the mass-weighted geometry.

Configurations are numpy arrays of shape ``(N, d)``; covectors (momenta,
gradients) share the shape. The configuration norm is ``sqrt(I(x))`` with
``I(x) = sum_i m_i |r_i|^2`` and the dual norm on covectors is
``sqrt(sum_i |p_i|^2 / m_i)``. The gravitational constant is 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class CollisionError(ValueError):
    """Raised when a quantity is undefined at a collision configuration."""


@dataclass(frozen=True)
class MassSystem:
    """N positive point masses in d-dimensional space."""

    masses: tuple[float, ...]
    dim: int

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        object.__setattr__(self, "masses", masses)
        if len(masses) < 2:
            raise ValueError("need at least two bodies")
        if any(not np.isfinite(m) or m <= 0 for m in masses):
            raise ValueError(f"masses must be positive, got {masses}")
        if int(self.dim) < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def n_bodies(self) -> int:
        return len(self.masses)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_bodies, self.dim)

    @property
    def m(self) -> np.ndarray:
        return np.asarray(self.masses)

    @property
    def weights(self) -> np.ndarray:
        """Per-coordinate mass weights, flattened in C order."""
        return np.repeat(self.m, self.dim)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("configuration has non-finite coordinates")
        return x

    # Batched kernels used by the path optimizer: X has shape (K, N, d).

    def potential_batch(self, X: np.ndarray) -> np.ndarray:
        diff = X[:, :, None, :] - X[:, None, :, :]
        r = np.sqrt(np.einsum("kijd,kijd->kij", diff, diff))
        iu = np.triu_indices(self.n_bodies, 1)
        rij = r[:, iu[0], iu[1]]
        mm = (self.m[:, None] * self.m[None, :])[iu]
        with np.errstate(divide="ignore"):
            terms = np.where(rij > 0, mm / np.where(rij > 0, rij, 1.0), np.inf)
        return terms.sum(axis=1)

    def gradient_batch(self, X: np.ndarray) -> np.ndarray:
        diff = X[:, None, :, :] - X[:, :, None, :]  # r_j - r_i at [k, i, j]
        r2 = np.einsum("kijd,kijd->kij", diff, diff)
        n = self.n_bodies
        r2[:, np.arange(n), np.arange(n)] = 1.0
        if np.any(r2 == 0):
            raise CollisionError("gradient undefined at a collision")
        mm = self.m[:, None] * self.m[None, :]
        coef = mm / r2**1.5
        coef[:, np.arange(n), np.arange(n)] = 0.0
        return np.einsum("kij,kijd->kid", coef, diff)

    def hessian_batch(self, X: np.ndarray) -> np.ndarray:
        """Hessian of U at each knot, shape (K, N*d, N*d)."""
        K, n, d = X.shape
        diff = X[:, :, None, :] - X[:, None, :, :]
        r2 = np.einsum("kijd,kijd->kij", diff, diff)
        r2[:, np.arange(n), np.arange(n)] = 1.0
        if np.any(r2 == 0):
            raise CollisionError("hessian undefined at a collision")
        r = np.sqrt(r2)
        mm = self.m[:, None] * self.m[None, :]
        # d^2/dr_i dr_j of m_i m_j / |r_i - r_j| for i != j
        outer = np.einsum("kija,kijb->kijab", diff, diff)
        eye = np.eye(d)
        pair = mm[None, :, :, None, None] * (
            eye / r[..., None, None] ** 3 - 3.0 * outer / r[..., None, None] ** 5
        )
        pair[:, np.arange(n), np.arange(n)] = 0.0
        H = np.zeros((K, n, n, d, d))
        H += pair
        H[:, np.arange(n), np.arange(n)] = -pair.sum(axis=2)
        return H.transpose(0, 1, 3, 2, 4).reshape(K, n * d, n * d)


@dataclass(frozen=True)
class KeplerSystem:
    """Central Kepler field ``U0 / ||x||`` on the mass-weighted configuration space.

    With a single unit mass this is the ordinary planar/spatial Kepler problem.
    """

    U0: float
    masses: tuple[float, ...] = (1.0,)
    dim: int = 2
    m: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.U0 <= 0:
            raise ValueError("U0 must be positive")
        object.__setattr__(self, "masses", tuple(float(v) for v in self.masses))
        object.__setattr__(self, "m", np.asarray(self.masses))

    @property
    def n_bodies(self) -> int:
        return len(self.masses)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_bodies, self.dim)

    @property
    def weights(self) -> np.ndarray:
        return np.repeat(self.m, self.dim)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {x.shape}")
        return x

    def _norm(self, X):
        return np.sqrt(np.einsum("kid,i,kid->k", X, self.m, X))

    def potential_batch(self, X):
        rho = self._norm(X)
        with np.errstate(divide="ignore"):
            return np.where(rho > 0, self.U0 / np.where(rho > 0, rho, 1.0), np.inf)

    def gradient_batch(self, X):
        rho = self._norm(X)
        if np.any(rho == 0):
            raise CollisionError("gradient undefined at the origin")
        return -self.U0 * self.m[None, :, None] * X / rho[:, None, None] ** 3

    def hessian_batch(self, X):
        K = X.shape[0]
        rho = self._norm(X)
        if np.any(rho == 0):
            raise CollisionError("hessian undefined at the origin")
        w = self.weights
        mx = (w[None, :] * X.reshape(K, -1))
        return self.U0 * (
            3.0 * np.einsum("ka,kb->kab", mx, mx) / rho[:, None, None] ** 5
            - np.diag(w)[None] / rho[:, None, None] ** 3
        )


def inertia(sys, x) -> float:
    """Moment of inertia ``sum_i m_i |r_i|^2`` about the origin."""
    x = sys.check(x)
    return float(np.einsum("i,id,id->", sys.m, x, x))


def mass_norm(sys, x) -> float:
    return float(np.sqrt(inertia(sys, x)))


def mass_inner(sys, x, y) -> float:
    return float(np.einsum("i,id,id->", sys.m, sys.check(x), sys.check(y)))


def potential(sys, x) -> float:
    """Newtonian potential; ``inf`` at any collision."""
    return float(sys.potential_batch(sys.check(x)[None])[0])


def grad_potential(sys, x) -> np.ndarray:
    """Gradient of U, shape ``(N, d)``. Raises `CollisionError` at a collision."""
    return sys.gradient_batch(sys.check(x)[None])[0]


def kinetic(sys, v) -> float:
    return 0.5 * inertia(sys, v)


def lagrangian(sys, x, v) -> float:
    return kinetic(sys, v) + potential(sys, x)


def dual_norm(sys, p) -> float:
    """Norm dual to the mass norm: ``sqrt(sum_i |p_i|^2 / m_i)``."""
    p = np.asarray(p, dtype=float)
    if p.shape != sys.shape:
        raise ValueError(f"expected shape {sys.shape}, got {p.shape}")
    return float(np.sqrt(np.einsum("i,id,id->", 1.0 / sys.m, p, p)))


def center_of_mass(sys, x) -> np.ndarray:
    x = sys.check(x)
    return sys.m @ x / sys.m.sum()


def min_separation(x) -> float:
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2:
        return np.inf
    diff = x[:, None, :] - x[None, :, :]
    r = np.sqrt((diff**2).sum(-1))
    return float(r[np.triu_indices(n, 1)].min())


@dataclass(frozen=True)
class HomotheticMotion:
    """Parabolic homothetic motion ``t -> c t^(2/3) x0`` with ``c^3 = 9 U0 / 2``."""

    x0: np.ndarray
    U0: float

    def __post_init__(self):
        if self.U0 <= 0:
            raise ValueError("U0 must be positive")
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))

    @property
    def c(self) -> float:
        return (4.5 * self.U0) ** (1.0 / 3.0)

    def radius(self, t):
        """Norm of the configuration at time t, ``c t^(2/3)``."""
        return self.c * np.asarray(t, dtype=float) ** (2.0 / 3.0)

    def time_at_radius(self, rho):
        return (np.asarray(rho, dtype=float) / self.c) ** 1.5

    def velocity(self, t: float) -> np.ndarray:
        return (2.0 / 3.0) * self.c * t ** (-1.0 / 3.0) * self.x0

    def action(self, t1: float, t2: float) -> float:
        """Action of the motion on ``[t1, t2]``: ``(4 c^2 / 3)(t2^(1/3) - t1^(1/3))``."""
        return 4.0 * self.c**2 / 3.0 * (np.cbrt(t2) - np.cbrt(t1))


def homothetic(hm: HomotheticMotion, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return hm.c * t ** (2.0 / 3.0) * hm.x0


def homothetic_scale_residual(U0: float, t: float) -> float:
    """Residual of ``lam'' lam^2 + U0`` for ``lam(t) = c t^(2/3)``."""
    c = (4.5 * U0) ** (1.0 / 3.0)
    lam = c * t ** (2.0 / 3.0)
    lam_dd = -(2.0 / 9.0) * c * t ** (-4.0 / 3.0)
    return lam_dd * lam**2 + U0


def min_distance_batch(sys, X: np.ndarray, relative: bool = False) -> np.ndarray:
    """Smallest pairwise distance per knot (distance to the origin for Kepler fields).

    With ``relative=True`` N-body distances are divided by the configuration
    norm, which makes the measure invariant under scaling.
    """
    if isinstance(sys, KeplerSystem):
        return sys._norm(X)
    n = X.shape[1]
    diff = X[:, :, None, :] - X[:, None, :, :]
    r = np.sqrt(np.einsum("kijd,kijd->kij", diff, diff))
    iu = np.triu_indices(n, 1)
    dmin = r[:, iu[0], iu[1]].min(axis=1)
    if relative:
        rho = np.sqrt(np.einsum("kid,i,kid->k", X, sys.m, X))
        dmin = dmin / np.where(rho > 0, rho, 1.0)
    return dmin
