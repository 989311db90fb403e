"""Equation of motion of a compass in a fixed plus a rotating magnetic field.

In dimensionless form the needle angle obeys

    theta'' + alpha * theta' = -x * sin(theta) - P * sin(theta - t)

with ``x`` the fixed-field strength (the knob that plays the role of an
analyser setting) and ``P`` the rotating-field strength.  Integration is done
in unwrapped coordinates; wrapping happens only for reporting.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.integrate import solve_ivp

from . import _kernels
from .errors import DomainError, NonFiniteState

TWO_PI = 2.0 * math.pi

DEFAULT_ALPHA = 0.174
DEFAULT_P = 0.335


@dataclass(frozen=True)
class CompassParams:
    alpha: float = DEFAULT_ALPHA
    P: float = DEFAULT_P
    x: float = 0.160

    def __post_init__(self):
        for name in ("alpha", "P", "x"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    def with_x(self, x: float) -> CompassParams:
        return CompassParams(self.alpha, self.P, x)


def wrap_angle(theta: float) -> float:
    """Reduce ``theta`` to the half-open interval (-pi, pi]."""
    r = math.remainder(theta, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True)
class PhaseState:
    theta: float
    theta_dot: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.theta_dot)):
            raise DomainError(f"phase state must be finite, got {self!r}")

    @property
    def wrapped(self) -> float:
        return wrap_angle(self.theta)

    def __add__(self, other: PhaseState) -> PhaseState:
        return PhaseState(self.theta + other.theta, self.theta_dot + other.theta_dot)

    def as_tuple(self) -> tuple[float, float]:
        return (self.theta, self.theta_dot)


ZERO_STATE = PhaseState(0.0, 0.0)


@dataclass(frozen=True)
class IntegratorSettings:
    """Numerical method.  ``rk4`` is the reference; ``adaptive`` (DOP853) is a cross-check.

    The fixed-step integrator never uses a step larger than ``step``: an
    interval of length T is split into ``ceil(T / step)`` equal steps so that
    the run ends exactly at T.
    """

    method: Literal["rk4", "adaptive"] = "rk4"
    step: float = 1e-3
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12

    def __post_init__(self):
        if self.method not in ("rk4", "adaptive"):
            raise DomainError(f"unknown integrator method {self.method!r}")
        if not (self.step > 0 and self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("step and tolerances must be positive")

    def steps_for(self, span: float) -> int:
        # guard against 100/1e-3 = 100000.00000000001
        return max(1, math.ceil(span / self.step * (1 - 1e-12)))


DEFAULT_SETTINGS = IntegratorSettings()


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    params: CompassParams
    settings: IntegratorSettings = field(default=DEFAULT_SETTINGS)

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> PhaseState:
        return PhaseState(float(self.theta[-1]), float(self.theta_dot[-1]))

    @property
    def theta_wrapped(self) -> np.ndarray:
        return np.array([wrap_angle(v) for v in self.theta])

    def state(self, i: int) -> PhaseState:
        return PhaseState(float(self.theta[i]), float(self.theta_dot[i]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "theta", "theta_dot", "theta_wrapped"])
        for t, th, om, tw in zip(self.times, self.theta, self.theta_dot, self.theta_wrapped):
            w.writerow([f"{t:.17g}", f"{th:.17g}", f"{om:.17g}", f"{tw:.17g}"])
        return buf.getvalue()


def deriv(params: CompassParams, t: float, s: PhaseState) -> tuple[float, float]:
    return (
        s.theta_dot,
        -params.alpha * s.theta_dot - params.x * math.sin(s.theta) - params.P * math.sin(s.theta - t),
    )


def _rhs(params: CompassParams):
    alpha, P, x = params.alpha, params.P, params.x

    def f(t, y):
        return (y[1], -alpha * y[1] - x * math.sin(y[0]) - P * math.sin(y[0] - t))

    return f


def _solve_adaptive(params, y0, t0, t_eval, settings):
    sol = solve_ivp(
        _rhs(params),
        (t0, t_eval[-1]),
        list(y0),
        method="DOP853",
        t_eval=t_eval,
        rtol=settings.rel_tol,
        atol=settings.abs_tol,
    )
    if not sol.success or not np.all(np.isfinite(sol.y)):
        bad = sol.t[-1] if len(sol.t) else t0
        raise NonFiniteState(float(bad), f"adaptive integration failed near t={bad!r}: {sol.message}")
    return sol.y


def advance_steps(params: CompassParams, s: PhaseState, k0: int, h: float, n: int) -> PhaseState:
    """Advance ``s`` by ``n`` RK4 steps of size ``h`` starting at time ``k0 * h``."""
    th, om, bad = _kernels.advance(params.alpha, params.P, params.x, s.theta, s.theta_dot, k0, h, n)
    if bad >= 0:
        raise NonFiniteState(bad * h)
    return PhaseState(th, om)


def advance_span(
    params: CompassParams, s: PhaseState, t0: float, t1: float, h: float, settings: IntegratorSettings
) -> PhaseState:
    """Advance from ``t0`` to ``t1``; for rk4, both must be multiples of ``h``."""
    if settings.method == "rk4":
        return advance_steps(params, s, round(t0 / h), h, round((t1 - t0) / h))
    y = _solve_adaptive(params, s.as_tuple(), t0, np.array([t1]), settings)
    return PhaseState(float(y[0, -1]), float(y[1, -1]))


def integrate(
    params: CompassParams,
    initial: PhaseState,
    t_end: float,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    sample_every: int = 1,
) -> Trajectory:
    """Integrate from t=0 to ``t_end``, keeping every ``sample_every``-th step plus the endpoint."""
    if not t_end > 0:
        raise DomainError(f"t_end must be positive, got {t_end!r}")
    if sample_every < 1:
        raise DomainError("sample_every must be >= 1")
    n = settings.steps_for(t_end)
    h = t_end / n
    if settings.method == "rk4":
        rows = n // sample_every + 2
        out = np.empty((rows, 3))
        used, bad = _kernels.record(
            params.alpha, params.P, params.x, initial.theta, initial.theta_dot, h, n, sample_every, out
        )
        if bad >= 0:
            raise NonFiniteState(bad * h)
        out = out[:used]
        return Trajectory(out[:, 0].copy(), out[:, 1].copy(), out[:, 2].copy(), params, settings)

    idx = np.arange(sample_every, n + 1, sample_every)
    if idx.size == 0 or idx[-1] != n:
        idx = np.append(idx, n)
    t_eval = idx * h
    y = _solve_adaptive(params, initial.as_tuple(), 0.0, t_eval, settings)
    times = np.concatenate(([0.0], t_eval))
    return Trajectory(
        times,
        np.concatenate(([initial.theta], y[0])),
        np.concatenate(([initial.theta_dot], y[1])),
        params,
        settings,
    )


def state_at(
    params: CompassParams, initial: PhaseState, t_m: float, settings: IntegratorSettings = DEFAULT_SETTINGS
) -> PhaseState:
    if not t_m > 0:
        raise DomainError(f"t_m must be positive, got {t_m!r}")
    n = settings.steps_for(t_m)
    h = t_m / n
    if settings.method == "rk4":
        return advance_steps(params, initial, 0, h, n)
    return advance_span(params, initial, 0.0, t_m, h, settings)
