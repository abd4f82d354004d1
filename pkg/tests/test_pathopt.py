import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import kepler_arc, phi_origin_ray, ray_action
from nbody_busemann.core import MassSystem, homothetic, potential
from nbody_busemann.kepler import Kepler1D, action_fixed
from nbody_busemann import pathopt as P

OPTS = P.MinimizeOptions()


def test_trajectory_validation():
    with pytest.raises(ValueError):
        P.Trajectory(np.array([0.0]), np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        P.Trajectory(np.array([0.0, 0.0]), np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        P.Trajectory(np.array([0.0, 1.0]), np.zeros((3, 2, 2)))


def test_trajectory_helpers():
    pts = np.arange(12.0).reshape(3, 2, 2)
    tr = P.Trajectory(np.array([0.0, 1.0, 3.0]), pts)
    np.testing.assert_allclose(tr.at(2.0), (pts[1] + pts[2]) / 2)
    assert tr.duration == 3.0 and tr.segments == 2
    np.testing.assert_allclose(tr.reversed().points, pts[::-1])
    assert tr.shifted(5.0).knots[0] == 5.0


def test_constant_path_action(n3, rng):
    x = P.random_configuration(n3, rng)
    tr = P.Trajectory(np.linspace(0, 2.5, 9), np.repeat(x[None], 9, axis=0))
    assert P.discrete_action(n3, tr) == pytest.approx(2.5 * potential(n3, x), rel=1e-12)


def test_collision_knot_is_infinite(n3):
    x = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    y = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 0.0]])
    tr = P.Trajectory(np.array([0.0, 1.0, 2.0]), np.stack([y, x, y]))
    assert P.discrete_action(n3, tr) == math.inf


def test_sampled_ray_action(n3, hm3):
    ts = np.geomspace(0.1, 1.0, 2049)
    tr = P.Trajectory(ts, np.stack([homothetic(hm3, t) for t in ts]))
    assert P.discrete_action(n3, tr) == pytest.approx(ray_action(hm3.U0, 0.1, 1.0), rel=3e-3)


def test_grid_doubling_order(n3, hm3):
    exact = ray_action(hm3.U0, 0.1, 1.0)
    errs = []
    for M in (64, 128, 256):
        ts = np.linspace(0.1, 1.0, M + 1)
        tr = P.Trajectory(ts, np.stack([homothetic(hm3, t) for t in ts]))
        errs.append(abs(P.discrete_action(n3, tr) - exact))
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_two_body_matches_radial_kepler():
    s = MassSystem((1.0, 1.0), 2)
    # relative coordinate r with reduced mass 1/2: L = r'^2/4 + 1/r; rescale to radial unit-mass Kepler
    e = np.array([1.0, 0.0])
    for r0, r1, T in ((1.0, 3.0, 2.0), (0.5, 2.0, 4.0)):
        x = np.stack([-r0 / 2 * e, r0 / 2 * e])
        y = np.stack([-r1 / 2 * e, r1 / 2 * e])
        est = P.minimize_fixed_time(s, x, y, T, OPTS)
        # with u = r / sqrt(2): L = u'^2/2 + (1/sqrt 2)/u
        ref = action_fixed(Kepler1D(2**-0.5), r0 / math.sqrt(2), r1 / math.sqrt(2), T)
        assert est.value == pytest.approx(ref, rel=2e-3)
        assert est.converged


def test_fixed_time_below_constant_path(n3, rng):
    x = P.random_configuration(n3, rng)
    est = P.minimize_fixed_time(n3, x, x, 1.5, OPTS)
    assert est.value <= 1.5 * potential(n3, x) + est.discretization_error


def test_free_time_equal_endpoints(n3, rng):
    x = P.random_configuration(n3, rng)
    est = P.minimize_free_time(n3, x, x)
    assert est.value == 0.0 and est.trajectory is None


@pytest.mark.parametrize("T", [1.0, 8.0])
def test_free_time_from_total_collision(n3, hm3, T):
    est = P.minimize_free_time(n3, np.zeros(n3.shape), homothetic(hm3, T), OPTS)
    assert est.value == pytest.approx(phi_origin_ray(hm3.U0, T), rel=5e-3)
    assert est.duration == pytest.approx(T, rel=1e-2)


def test_free_time_along_ray(n3, hm3):
    est = P.minimize_free_time(n3, homothetic(hm3, 1.0), homothetic(hm3, 10.0), OPTS)
    assert est.value == pytest.approx(ray_action(hm3.U0, 1.0, 10.0), rel=5e-3)
    assert est.duration == pytest.approx(9.0, rel=1e-3)


def test_free_time_properties(n3, rng):
    x, y = P.random_configuration(n3, rng), P.random_configuration(n3, rng)
    est = P.minimize_free_time(n3, x, y, OPTS)
    # phi(x,y;T) >= phi(x,y) everywhere on the scan, near-equal at T*
    assert min(v for _, v in est.scan) >= est.value - 10 * est.discretization_error - 1e-9
    # zero energy along a free-time minimizer
    U = n3.potential_batch(est.trajectory.points)
    en = P.segment_energies(n3, est.trajectory)
    mid = slice(len(en) // 4, 3 * len(en) // 4)
    assert np.max(np.abs(en[mid])) <= 0.05 * np.median(U)
    # restriction optimality: a sub-arc is a fixed-time minimizer between its endpoints
    tr = est.trajectory
    k = tr.segments // 2
    sub = tr.restrict(0, k)
    again = P.minimize_fixed_time(n3, sub.points[0], sub.points[-1], sub.duration, OPTS)
    assert P.discrete_action(n3, sub) == pytest.approx(again.value, rel=1e-3)


def test_symmetry_and_triangle(n3):
    rng = np.random.default_rng(99)
    triples = [tuple(P.random_configuration(n3, rng, 2.0) for _ in range(3)) for _ in range(3)]
    assert P.triangle_check(n3, triples).ok
    assert P.symmetry_check(n3, [(a, b) for a, b, _ in triples]).ok


def test_holder_and_maderna_frozen(n3):
    rng = np.random.default_rng(404)
    assert P.holder_check(n3, P.holder_pairs(n3, rng, 6, with_origin=2), P.FROZEN_ETA).ok
    assert P.maderna_check(n3, P.maderna_cases(n3, rng, 6), *P.FROZEN_MADERNA).ok


def test_maderna_fit_is_feasible(n3):
    cases = P.maderna_cases(n3, np.random.default_rng(5), 12)
    a, b = P.fit_maderna(n3, cases)
    assert P.maderna_check(n3, cases, a + 1e-9, b + 1e-9).ok
    assert a >= 0 and b >= 0


def test_time_grid():
    g = P.time_grid(5.0, 10, 0.3)
    assert g[0] == 0.0 and g[-1] == pytest.approx(5.0) and np.all(np.diff(g) > 0)
    np.testing.assert_allclose(np.diff((g + 0.3) ** (1 / 6)), ((5.3) ** (1 / 6) - 0.3 ** (1 / 6)) / 10)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 3.0))
def test_homothetic_scaling(lam):
    # phi(lam x, lam y; lam^(3/2) T) = lam^(1/2) phi(x, y; T)
    s = MassSystem((1.0, 1.0, 1.0), 2)
    rng = np.random.default_rng(1)
    x, y = P.random_configuration(s, rng), P.random_configuration(s, rng)
    o = P.MinimizeOptions(segments=48, refinement_levels=0, restarts=1)
    a = P.minimize_fixed_time(s, x, y, 1.0, o).value
    b = P.minimize_fixed_time(s, lam * x, lam * y, lam**1.5, o).value
    assert b == pytest.approx(math.sqrt(lam) * a, rel=1e-7)


def test_bracket_error_carries_profile(n3, rng):
    x, y = P.random_configuration(n3, rng), P.random_configuration(n3, rng)
    with pytest.raises(P.BracketError) as info:
        P.minimize_free_time(n3, x, y, P.with_options(None, scan_points=3), time_scale=1e-12)
    assert len(info.value.profile) > 3


def test_options_validation():
    with pytest.raises(ValueError):
        P.MinimizeOptions(segments=1)
    with pytest.raises(ValueError):
        P.MinimizeOptions(gradient_tolerance=0.0)


def test_kepler_oracle_consistency():
    # the radial oracle agrees with the semi-analytic solver used above
    t, S = kepler_arc(1.0, -0.2, 0.5, 3.0)
    assert action_fixed(Kepler1D(1.0), 0.5, 3.0, t) == pytest.approx(S, rel=1e-9)
