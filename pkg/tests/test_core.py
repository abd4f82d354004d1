import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbody_busemann.core import (
    CollisionError,
    HomotheticMotion,
    MassSystem,
    dual_norm,
    grad_potential,
    homothetic,
    homothetic_scale_residual,
    inertia,
    lagrangian,
    mass_norm,
    potential,
)

seeds = st.integers(0, 2**32 - 1)


def random_config(seed, n=3, d=2):
    return np.random.default_rng(seed).normal(size=(n, d))


def well_separated(x, floor=0.2):
    return min(np.linalg.norm(x[i] - x[j]) for i in range(len(x)) for j in range(i)) > floor


def test_mass_system_validation():
    with pytest.raises(ValueError):
        MassSystem((1.0,), 2)
    with pytest.raises(ValueError):
        MassSystem((1.0, -1.0), 2)
    with pytest.raises(ValueError):
        MassSystem((1.0, 1.0), 0)
    with pytest.raises(ValueError):
        MassSystem((1.0, 1.0), 2).check(np.zeros((3, 2)))


def test_inertia_examples():
    s = MassSystem((1.0, 1.0), 1)
    assert inertia(s, np.array([[-2**-0.5], [2**-0.5]])) == pytest.approx(1.0)
    assert inertia(s, np.zeros((2, 1))) == 0.0


def test_potential_examples(n3):
    s = MassSystem((1.0, 1.0), 2)
    assert potential(s, np.array([[0.0, 0.0], [math.sqrt(2), 0.0]])) == pytest.approx(2**-0.5)
    assert potential(s, np.zeros((2, 2))) == math.inf
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    assert potential(n3, tri) == pytest.approx(3.0)


def test_unit_separation_force():
    s = MassSystem((1.0, 1.0), 2)
    g = grad_potential(s, np.array([[-0.5, 0.0], [0.5, 0.0]]))
    # with L = T + U the force is +grad U; it pulls each body toward the other
    np.testing.assert_allclose(g, [[1.0, 0.0], [-1.0, 0.0]])


def test_gradient_at_collision_raises():
    with pytest.raises(CollisionError):
        grad_potential(MassSystem((1.0, 1.0), 2), np.zeros((2, 2)))


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.1, 10.0))
def test_homogeneity(seed, lam):
    s = MassSystem((1.0, 2.0, 0.5), 2)
    x = random_config(seed)
    assert inertia(s, lam * x) == pytest.approx(lam**2 * inertia(s, x), rel=1e-12)
    assert potential(s, lam * x) == pytest.approx(potential(s, x) / lam, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_euler_identity_and_translation(seed):
    s = MassSystem((1.0, 2.0, 0.5), 3)
    x = random_config(seed, d=3)
    g = grad_potential(s, x)
    assert float(np.sum(g * x)) == pytest.approx(-potential(s, x), rel=1e-8)
    w = np.random.default_rng(seed + 1).normal(size=3)
    assert potential(s, x + w) == pytest.approx(potential(s, x), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_gradient_matches_finite_differences(seed):
    s = MassSystem((1.0, 2.0, 0.5), 2)
    x = random_config(seed)
    if not well_separated(x):
        return
    g = grad_potential(s, x)
    h = 1e-5
    fd = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        fd[idx] = (potential(s, x + e) - potential(s, x - e)) / (2 * h)
    assert np.linalg.norm(fd - g) <= 1e-6 * np.linalg.norm(g)


def test_hessian_matches_gradient_differences():
    s = MassSystem((1.0, 2.0, 0.5), 2)
    x = random_config(3)
    H = s.hessian_batch(x[None])[0]
    h = 1e-6
    fd = np.zeros_like(H)
    flat = x.reshape(-1)
    for k in range(flat.size):
        e = np.zeros_like(flat)
        e[k] = h
        gp = s.gradient_batch((flat + e).reshape(x.shape)[None])[0].reshape(-1)
        gm = s.gradient_batch((flat - e).reshape(x.shape)[None])[0].reshape(-1)
        fd[:, k] = (gp - gm) / (2 * h)
    assert np.linalg.norm(fd - H) <= 1e-6 * np.linalg.norm(H)


def test_dual_norm_examples(rng):
    s = MassSystem((1.0, 1.0, 1.0), 2)
    p = rng.normal(size=(3, 2))
    assert dual_norm(s, np.zeros((3, 2))) == 0.0
    assert dual_norm(s, p) == pytest.approx(np.linalg.norm(p))
    s4 = MassSystem((4.0, 4.0, 4.0), 2)
    assert dual_norm(s4, p) == pytest.approx(dual_norm(s, p) / 2)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_dual_pairing_inequality(seed):
    s = MassSystem((1.0, 3.0, 0.2), 2)
    r = np.random.default_rng(seed)
    p, v = r.normal(size=(3, 2)), r.normal(size=(3, 2))
    assert float(np.sum(p * v)) <= dual_norm(s, p) * mass_norm(s, v) * (1 + 1e-12)


def test_lagrangian(n3, hm3):
    x = random_config(5)
    assert lagrangian(n3, x, np.zeros_like(x)) == potential(n3, x)
    c = hm3.c
    # kinetic = potential = 2c^2/9 on the parabolic motion at t = 1
    assert lagrangian(n3, homothetic(hm3, 1.0), hm3.velocity(1.0)) == pytest.approx(4 * c * c / 9, rel=1e-12)
    v = np.ones_like(x)
    big = lagrangian(n3, 1e6 * x, v)
    assert big - 0.5 * float(np.sum(v * v)) == pytest.approx(potential(n3, x) / 1e6)


def test_homothetic_motion(n3, hm3):
    assert hm3.c**3 == pytest.approx(4.5 * hm3.U0, rel=1e-15)
    np.testing.assert_allclose(homothetic(hm3, 1.0), hm3.c * hm3.x0)
    assert mass_norm(n3, homothetic(hm3, 1e-12)) < 1e-7
    for t in (0.3, 2.0, 17.0):
        assert inertia(n3, homothetic(hm3, t)) == pytest.approx(hm3.c**2 * t ** (4 / 3))
        assert homothetic_scale_residual(hm3.U0, t) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        HomotheticMotion(hm3.x0, -1.0)


def test_ray_action_closed_form(hm3):
    from oracles import ray_action

    assert hm3.action(0.5, 4.0) == pytest.approx(ray_action(hm3.U0, 0.5, 4.0), rel=1e-12)
