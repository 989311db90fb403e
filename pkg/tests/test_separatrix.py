import math

import pytest
from hypothesis import given, settings, strategies as st

from compassbell.errors import DomainError, OnSeparatrix
from compassbell.separatrix import (
    OMEGA,
    angle_to_omega,
    chsh_from_table,
    flow_state,
    project,
    reproduce_cos_exact,
)
from compassbell.synthesis import DEFAULT_GRID, reproduce_cos

CHSH = (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)


def closed_form(x, l0, t):
    return math.copysign(1.0, l0) / math.sqrt(1 + (1 / l0**2 - 1) * math.exp(-2 * x * t))


@pytest.mark.parametrize("x, l0, t", [(0.5, 0.3, 2.0), (1.0, -0.01, 5.0), (2.0, 1e-4, 3.0), (0.7, 0.9, 10.0)])
def test_flow_matches_closed_form(x, l0, t):
    assert flow_state(x, l0, t) == pytest.approx(closed_form(x, l0, t), rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(1e-6, 0.999), st.sampled_from([-1, 1]), st.floats(0.1, 20.0))
def test_sign_conserved(x, mag, sign, t):
    l0 = sign * mag
    lt = flow_state(x, l0, t)
    assert math.copysign(1.0, lt) == sign
    assert abs(lt) >= abs(l0) * (1 - 1e-9)


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("l0", [5e-4, -5e-4, 1e-30, -0.4])
def test_projection_agrees_with_flow(x, l0):
    T = -math.log(abs(l0)) / x
    for k in (1, 2, 10):
        lt = flow_state(x, l0, k * T)
        assert math.copysign(1.0, lt) == project(x, l0)
    # late times approach the attractor
    assert abs(flow_state(x, l0, 10 * T) - project(x, l0)) < 1e-3


def test_separatrix_is_invariant():
    assert flow_state(1.0, 0.0, 50.0) == 0.0
    with pytest.raises(OnSeparatrix):
        project(1.0, 0.0)


def test_omega_domain():
    with pytest.raises(DomainError):
        project(0.4, 0.1)
    with pytest.raises(DomainError):
        angle_to_omega(2.0)
    assert angle_to_omega(0.0) == OMEGA[0]
    assert angle_to_omega(math.pi / 2) == OMEGA[1]


def test_large_ensemble_reaches_tsirelson():
    # M moves in steps of 2/N, so each term can be off by 1/N
    rep = reproduce_cos_exact(CHSH, N=1000)
    S = chsh_from_table(rep.m_table(), *CHSH)
    assert abs(S - 2 * math.sqrt(2)) <= 4 / 1000
    assert S == pytest.approx(4 * 0.708)


@pytest.mark.parametrize("eps", [1e-300, 1e-100, 1e-12, 1e-3])
def test_results_do_not_depend_on_epsilon(eps):
    ref = reproduce_cos_exact(epsilon=1e-3).m_table()
    assert reproduce_cos_exact(epsilon=eps).m_table() == ref


def test_epsilon_underflow_rejected():
    with pytest.raises(DomainError):
        reproduce_cos_exact(epsilon=5e-324)


def test_matches_discretized_targets():
    rep = reproduce_cos_exact(DEFAULT_GRID, 8)
    assert len(rep.pairs) == 16
    for p in rep.pairs:
        assert p.M == p.discretized
    assert rep.max_abs_err <= 1 / 16 + 1e-12


def test_same_table_as_chaotic_synthesis(default_cos_report):
    exact = reproduce_cos_exact(DEFAULT_GRID, 8).m_table()
    assert {(p.a, p.b): p.M for p in default_cos_report.pairs} == exact
