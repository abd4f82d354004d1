import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import c_of, kepler_arc
from nbody_busemann.kepler import (
    Kepler1D,
    KeplerSolveError,
    a0_integral,
    action_expansion_check,
    action_fixed,
    action_free,
    b_integral,
    energy_scaled,
    gap_G,
    implicit_k,
    parabolic_time,
    quadratic_coefficient,
    radial_expansion_check,
    radial_quadratic_coefficient,
    solve_arc,
    solve_energy,
    time_of_flight,
)

KP = Kepler1D(1.0)


def test_c():
    assert KP.c == pytest.approx(1.650964, abs=1e-6)
    assert Kepler1D(3.0).c == pytest.approx(2.381102, abs=1e-6)
    with pytest.raises(ValueError):
        Kepler1D(0.0)


def test_parabolic_time_to_c():
    assert time_of_flight(KP, 0.0, 0.0, KP.c) == pytest.approx(1.0, rel=1e-10)
    for b in (0.3, 2.0, 7.0):
        assert time_of_flight(KP, 0.0, 0.0, b) == pytest.approx(math.sqrt(2 * b**3) / 3, rel=1e-10)
        assert parabolic_time(KP, 0.0, b) == pytest.approx(math.sqrt(2 * b**3) / 3, rel=1e-10)


@pytest.mark.parametrize(
    "U0,h,a,b,branch",
    [
        (1.0, -0.2, 0.0, 3.0, "direct"),
        (1.0, -0.2, 0.5, 3.0, "reflected"),
        (2.0, -1.5, 0.1, 1.2, "reflected"),
        (1.0, 0.7, 0.0, 4.0, "direct"),
        (3.0, 2.5, 1.0, 9.0, "direct"),
        (1.0, 0.0, 0.4, 2.0, "direct"),
    ],
)
def test_arcs_against_closed_form(U0, h, a, b, branch):
    kp = Kepler1D(U0)
    t, S = kepler_arc(U0, h, a, b, reflected=branch == "reflected")
    assert time_of_flight(kp, h, a, b, branch) == pytest.approx(t, rel=1e-10)
    arc = solve_arc(kp, a, b, t)
    assert arc.branch == branch
    assert arc.h == pytest.approx(h, abs=1e-8)
    assert arc.action == pytest.approx(S, rel=1e-9)
    if branch == "reflected":
        assert arc.r_max == pytest.approx(U0 / -h, rel=1e-8)


def test_solve_energy_examples():
    h, br = solve_energy(KP, 0.0, KP.c, 1.0)
    assert abs(h) < 1e-9 and br == "direct"
    assert solve_energy(KP, 0.0, KP.c, 0.8)[0] > 0
    assert solve_energy(KP, 0.0, KP.c, 1.3)[0] < 0


@settings(max_examples=30, deadline=None)
@given(st.floats(-2.0, 3.0), st.floats(0.0, 2.0), st.floats(0.05, 3.0))
def test_energy_round_trip(h, a, gap):
    b = a + gap
    assume(h >= 0 or b < 1.0 / -h * 0.999)
    t = time_of_flight(KP, h, a, b)
    h2, br = solve_energy(KP, a, b, t)
    assert br == "direct"
    assert h2 == pytest.approx(h, abs=1e-8)


def test_time_of_flight_decreasing_in_h():
    ts = [time_of_flight(KP, h, 0.5, 2.0) for h in (-0.4, -0.1, 0.0, 0.5, 2.0, 10.0)]
    assert all(b < a for a, b in zip(ts, ts[1:]))


def test_invalid_branch_energy():
    with pytest.raises(ValueError):
        time_of_flight(KP, 0.5, 0.0, 1.0, "reflected")
    with pytest.raises(ValueError):
        time_of_flight(KP, -1.0, 0.0, 2.0)  # turning radius 1 < b


def test_action_examples():
    assert action_fixed(KP, 0.0, 1.650964, 1.0) == pytest.approx(3.634241, abs=1e-5)
    assert action_fixed(KP, 0.0, KP.c, 1.0) == pytest.approx(2 * 6 ** (1 / 3), rel=1e-10)
    assert action_fixed(KP, 0.0, 1e3, 1.0) / 1e6 == pytest.approx(0.5, rel=0.02)


def test_action_free():
    assert action_free(KP, 2.0, 2.0) == 0.0
    assert action_free(KP, 0.0, 1.0) == pytest.approx(2.828427, abs=1e-6)
    assert action_free(KP, 0.0, 5.0) == pytest.approx(action_free(KP, 0.0, 2.0) + action_free(KP, 2.0, 5.0), rel=1e-14)


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (0.3, 2.0), (1.0, 6.0), (0.0, 0.2)])
def test_free_is_inf_of_fixed(a, b):
    from scipy.optimize import minimize_scalar

    t0 = parabolic_time(KP, a, b)
    res = minimize_scalar(lambda s: action_fixed(KP, a, b, t0 * math.exp(s)), bounds=(-1, 1), method="bounded",
                          options={"xatol": 1e-10})
    assert res.fun == pytest.approx(action_free(KP, a, b), abs=1e-6)
    assert res.x == pytest.approx(0.0, abs=1e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(0.1, 3.0), st.floats(0.2, 5.0))
def test_fixed_dominates_free_and_is_continuous(a, gap, t):
    b = a + gap
    S = action_fixed(KP, a, b, t)
    assert S >= action_free(KP, a, b) - 1e-9
    assert abs(action_fixed(KP, a, b, t + 1e-8) - S) <= 1e-6


def test_gap_function():
    c = KP.c
    assert abs(gap_G(KP, c)) <= 1e-8
    h = 1e-3
    g2 = (gap_G(KP, c + h) + gap_G(KP, c - h) - 2 * gap_G(KP, c)) / h**2
    assert g2 == pytest.approx(5 / 3, rel=1e-3)
    assert gap_G(KP, c / 2) > 0 and gap_G(KP, 2 * c) > 0
    vals = [gap_G(KP, r) for r in (0.4 * c, 0.7 * c, c, 1.5 * c, 2.5 * c)]
    assert vals[0] > vals[1] > vals[2] < vals[3] < vals[4]


def test_series_integrals():
    assert a0_integral(0.0) == pytest.approx(2.0, abs=1e-10)
    for k in (-0.1, -0.03, 0.05, 0.1):
        assert abs(a0_integral(k) - (2 + k / 3 - k * k / 20)) <= 0.02 * abs(k) ** 3
    for x in (0.1, 0.5, 0.9):
        assert b_integral(x, 0.0) == pytest.approx(2 * x, abs=1e-10)


def test_implicit_k():
    assert implicit_k(0.0, 0.0) == pytest.approx(0.0, abs=1e-13)
    assert implicit_k(0.0, 1e-3) / 1e-3 == pytest.approx(-10 / 3, rel=5e-3)
    with pytest.raises(KeplerSolveError):
        implicit_k(0.0, -5.0)


def test_energy_scaled_matches_solver():
    r, s, sg = 1.0, 1e4, 1.01
    h = solve_energy(KP, r, KP.c * s ** (2 / 3), sg * s)[0]
    assert energy_scaled(KP, r, s, sg) == pytest.approx(h, rel=1e-6)
    assert energy_scaled(KP, 0.0, 1e5, 1.0) == pytest.approx(0.0, abs=1e-15)
    # h s^(2/3)/(sigma-1) -> -10 U0/(3c)
    s, e = 1e8, 1e-4
    lead = energy_scaled(KP, 0.0, s, 1 + e) * s ** (2 / 3) / e
    assert lead == pytest.approx(-10 / (3 * KP.c), rel=1e-3)


def test_expansion_checks():
    for s in (1e3, 1e4, 1e5, 1e6):
        for sg in (0.99, 1.01):
            assert abs(action_expansion_check(KP, 1.0, s, sg).scaled_residual) <= 10
    assert quadratic_coefficient(KP, 1.0, 1e6, 0.01) == pytest.approx(5 / 9, rel=0.03)
    assert radial_quadratic_coefficient(KP, 1.0, 1e4, 0.01) == pytest.approx(5 / 18, rel=0.03)
    chk = radial_expansion_check(KP, 0.0, 1e4, 1.0)
    assert abs(chk.residual) <= 1e-6 * chk.action


def test_uniformity_is_pointwise_grid():
    # uniformity in sigma is only sampled on a grid
    s = 1e6
    res = [abs(action_expansion_check(KP, 0.5, s, 1 + e).scaled_residual) for e in (-0.02, -0.01, 0.0, 0.01, 0.02)]
    assert max(res) <= 10


def test_c_scaling_helper():
    assert c_of(1.0) == pytest.approx(KP.c)
