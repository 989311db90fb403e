import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from compassbell.errors import DomainError, NonFiniteState
from compassbell.ode import (
    CompassParams,
    IntegratorSettings,
    PhaseState,
    deriv,
    integrate,
    state_at,
    wrap_angle,
)

X0 = PhaseState(0.6, 0.0)
X1 = PhaseState(0.6, 1e-3)


def test_deriv_at_rest_with_aligned_drive():
    assert deriv(CompassParams(0.174, 0.335, 0.16), 0.0, PhaseState(0.0, 0.0)) == (0.0, 0.0)


def test_deriv_undriven_rest():
    assert deriv(CompassParams(0.174, 0.0, 0.0), 3.7, PhaseState(1.2, 0.0)) == (0.0, 0.0)


def test_deriv_direct_substitution():
    d = deriv(CompassParams(0.174, 0.335, 0.16), 0.0, PhaseState(math.pi / 2, 0.0))
    assert d[0] == 0.0
    assert d[1] == pytest.approx(-0.495, abs=1e-15)


def test_params_reject_negative():
    with pytest.raises(DomainError):
        CompassParams(alpha=-0.1)


def test_default_params():
    p = CompassParams()
    assert (p.alpha, p.P) == (0.174, 0.335)


@pytest.mark.parametrize(
    "theta, expected",
    [(0.0, 0.0), (2 * math.pi, 0.0), (-math.pi, math.pi), (math.pi, math.pi), (3 * math.pi, math.pi)],
)
def test_wrap_angle_examples(theta, expected):
    assert wrap_angle(theta) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-1e6, 1e6))
def test_wrap_angle_properties(theta):
    w = wrap_angle(theta)
    assert -math.pi < w <= math.pi
    assert wrap_angle(w) == w
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(theta), abs_tol=1e-9)


@given(st.floats(-100, 100))
def test_wrap_angle_periodic(theta):
    assert abs(wrap_angle(wrap_angle(theta + 2 * math.pi) - wrap_angle(theta))) < 1e-12


# reference wrapped angles at t_m = 100
@pytest.mark.parametrize("x, expected", [(0.160, 0.01), (0.170, -0.29)])
def test_regular_regime_matches_table(x, expected):
    a = state_at(CompassParams(x=x), X0, 100.0).wrapped
    b = state_at(CompassParams(x=x), X1, 100.0).wrapped
    assert a == pytest.approx(expected, abs=0.05)
    assert abs(a - b) < 1e-2


def test_chaotic_regime_separates():
    a = state_at(CompassParams(x=0.230), X0, 100.0).wrapped
    b = state_at(CompassParams(x=0.230), X1, 100.0).wrapped
    assert abs(wrap_angle(a - b)) > 0.1


def test_chaotic_value_qualitative():
    # reported 1.10; exact value depends on the integrator
    th = state_at(CompassParams(x=0.232), X0, 100.0).wrapped
    assert 0.3 < th < math.pi


def test_trajectory_shape_and_endpoint():
    traj = integrate(CompassParams(x=0.16), X0, 10.0, sample_every=250)
    assert traj.times[0] == 0.0
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[-1] == pytest.approx(10.0, abs=1e-3)
    assert traj.state(0) == X0
    assert traj.final == state_at(CompassParams(x=0.16), X0, 10.0)


def test_endpoint_recorded_when_not_multiple():
    traj = integrate(CompassParams(x=0.16), X0, 1.0, sample_every=300)
    assert list(traj.times[:-1]) == pytest.approx([0.0, 0.3, 0.6, 0.9])
    assert traj.times[-1] == 1.0


def test_first_step_close_to_initial():
    s = state_at(CompassParams(x=0.16), X0, 1e-3)
    assert abs(s.theta - X0.theta) < 1e-5
    assert abs(s.theta_dot - X0.theta_dot) < 1e-3


def test_rk4_fourth_order_convergence():
    p = CompassParams(x=0.16)
    h = 0.05
    f = [state_at(p, X0, 100.0, IntegratorSettings(step=s)).theta for s in (h, h / 2, h / 4)]
    ratio = abs(f[0] - f[1]) / abs(f[1] - f[2])
    assert 12 <= ratio <= 20


def test_rk4_agrees_with_adaptive_reference():
    p = CompassParams(x=0.16)
    ref = state_at(p, X0, 100.0, IntegratorSettings(method="adaptive", rel_tol=1e-12, abs_tol=1e-13))
    s = state_at(p, X0, 100.0)
    assert abs(s.theta - ref.theta) < 1e-9
    assert abs(s.theta_dot - ref.theta_dot) < 1e-9


def test_adaptive_trajectory_samples_match_rk4():
    p = CompassParams(x=0.17)
    a = integrate(p, X0, 20.0, IntegratorSettings(method="adaptive", rel_tol=1e-12, abs_tol=1e-13), 1000)
    b = integrate(p, X0, 20.0, sample_every=1000)
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_allclose(a.theta, b.theta, atol=1e-9)


def test_equilibrium_is_preserved():
    traj = integrate(CompassParams(0.174, 0.0, 0.2), PhaseState(0.0, 0.0), 50.0, sample_every=100)
    assert np.all(traj.theta == 0.0) and np.all(traj.theta_dot == 0.0)


def test_bit_reproducible():
    a = integrate(CompassParams(x=0.232), X0, 100.0, sample_every=10)
    b = integrate(CompassParams(x=0.232), X0, 100.0, sample_every=10)
    assert a.theta.tobytes() == b.theta.tobytes()
    assert a.theta_dot.tobytes() == b.theta_dot.tobytes()


def test_huge_step_raises_non_finite():
    with pytest.raises(NonFiniteState):
        integrate(CompassParams(x=0.16), X0, 1e4, IntegratorSettings(step=50.0))


def test_bad_arguments():
    with pytest.raises(DomainError):
        integrate(CompassParams(), X0, 0.0)
    with pytest.raises(DomainError):
        IntegratorSettings(step=0.0)
    with pytest.raises(DomainError):
        PhaseState(float("nan"), 0.0)


def test_csv_export_precision():
    traj = integrate(CompassParams(x=0.16), X0, 1.0, sample_every=500)
    lines = traj.to_csv().splitlines()
    assert lines[0] == "t,theta,theta_dot,theta_wrapped"
    assert len(lines) == len(traj) + 1
    t, th, om, tw = lines[-1].split(",")
    assert float(th) == traj.theta[-1]
    assert float(om) == traj.theta_dot[-1]
