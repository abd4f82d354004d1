import math

import numpy as np
import pytest

from oracles import euler_collinear_U0
from nbody_busemann.central import (
    CentralConfigError,
    criticality_residual,
    equilateral,
    find_minimal,
    homothetic_from,
)
from nbody_busemann.core import MassSystem, inertia, potential


def rotation(theta):
    return np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])


def test_residual_examples(n3):
    assert criticality_residual(n3, equilateral(n3)) <= 1e-9
    s2 = MassSystem((1.0, 3.0), 2)
    x = np.array([[3.0, 0.3], [-1.0, -0.1]])  # com = 0
    assert criticality_residual(s2, x) <= 1e-12
    pert = equilateral(n3) + 1e-2 * np.random.default_rng(0).normal(size=(3, 2))
    assert criticality_residual(n3, pert) > 1e-3


def test_two_body():
    cc = find_minimal(MassSystem((1.0, 1.0), 3), seed_count=4)
    assert cc.U0 == pytest.approx(2**-0.5, abs=1e-8)
    assert np.linalg.norm(cc.x0[0] - cc.x0[1]) == pytest.approx(math.sqrt(2), rel=1e-8)


@pytest.mark.parametrize("seed", [0, 3, 7])
def test_lagrange_triangle(n3, seed):
    cc = find_minimal(n3, seed_count=8, rng_seed=seed)
    assert cc.U0 == pytest.approx(3.0, abs=1e-8)
    assert inertia(n3, cc.x0) == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(n3.m @ cc.x0, 0.0, atol=1e-10)
    assert cc.residual <= 1e-10


def test_euler_collinear():
    s = MassSystem((1.0, 1.0, 1.0), 1)
    cc = find_minimal(s, seed_count=6)
    assert cc.U0 == pytest.approx(euler_collinear_U0(), rel=1e-8)
    assert sorted(cc.x0[:, 0]) == pytest.approx([-2**-0.5, 0.0, 2**-0.5], abs=1e-6)


def test_rotation_invariance(n3):
    cc = find_minimal(n3, seed_count=4)
    y = cc.x0 @ rotation(0.7).T
    assert potential(n3, y) == pytest.approx(cc.U0, abs=1e-12)
    assert criticality_residual(n3, y) <= cc.residual + 1e-12


def test_unequal_masses_certified():
    s = MassSystem((1.0, 2.0, 3.0), 2)
    cc = find_minimal(s, seed_count=4)
    assert cc.residual <= 1e-10
    assert inertia(s, cc.x0) == pytest.approx(1.0, abs=1e-10)


def test_homothetic_identity(n3):
    hm = homothetic_from(find_minimal(n3, seed_count=2))
    assert hm.c == pytest.approx(2.381102, abs=1e-6)
    assert 2 * (6 * hm.U0**2) ** (1 / 3) == pytest.approx(4 * hm.c**2 / 3, rel=1e-12)


def test_failure_diagnostics(n3):
    with pytest.raises(CentralConfigError) as info:
        find_minimal(n3, seed_count=2, max_iter=1)
    assert len(info.value.diagnostics) == 2
    with pytest.raises(ValueError):
        find_minimal(n3, seed_count=0)


def test_json(n3):
    d = find_minimal(n3, seed_count=2).to_json()
    assert d["schema"] == "v1" and set(d) >= {"positions", "masses", "dim", "U0", "residual"}
