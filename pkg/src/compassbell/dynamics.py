"""Regular versus chaotic behaviour of the compass model.

Tools: stroboscopic sections (one sample per drive period 2*pi), bifurcation
scans over the fixed-field strength, a two-trajectory largest Lyapunov
exponent, and wrapped-angle divergence curves.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, NonFiniteState
from .ode import (
    DEFAULT_SETTINGS,
    TWO_PI,
    CompassParams,
    IntegratorSettings,
    PhaseState,
    advance_span,
    wrap_angle,
)

# below integrator error at the default step, above typical orbit spacing
CLUSTER_TOL = 1e-4


@dataclass(frozen=True)
class LyapunovSettings:
    """Benettin renormalisation parameters.

    ``total`` is the whole evolution time including the discarded
    ``transient``; both are rounded to a whole number of renormalisation
    intervals.
    """

    d0: float = 1e-8
    renorm_interval: float = TWO_PI
    transient: float = 200 * TWO_PI
    total: float = 2000 * TWO_PI

    def __post_init__(self):
        if min(self.d0, self.renorm_interval, self.transient, self.total) <= 0:
            raise DomainError("Lyapunov settings must all be positive")
        if self.total <= self.transient:
            raise DomainError("total must exceed transient")

    @property
    def n_transient(self) -> int:
        return round(self.transient / self.renorm_interval)

    @property
    def n_total(self) -> int:
        return round(self.total / self.renorm_interval)


@dataclass(frozen=True, eq=False)
class BifurcationDataset:
    x: np.ndarray
    samples: tuple[np.ndarray, ...]

    def distinct_counts(self, tol: float = CLUSTER_TOL) -> list[int]:
        return [count_distinct(s, tol) for s in self.samples]

    def rows(self):
        for x, s in zip(self.x, self.samples):
            for v in s:
                yield float(x), float(v)


def _period_grid(settings: IntegratorSettings) -> tuple[int, float]:
    m = settings.steps_for(TWO_PI)
    return m, TWO_PI / m


def stroboscopic_section(
    params: CompassParams,
    initial: PhaseState,
    n_transient: int,
    n_keep: int,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
) -> list[PhaseState]:
    """States at t = 2*pi*k for k = n_transient+1 .. n_transient+n_keep."""
    if n_keep < 1 or n_transient < 0:
        raise DomainError("need n_keep >= 1 and n_transient >= 0")
    m, h = _period_grid(settings)
    s = initial
    if n_transient:
        s = advance_span(params, s, 0.0, n_transient * TWO_PI, h, settings)
    out = []
    for k in range(n_transient, n_transient + n_keep):
        s = advance_span(params, s, k * TWO_PI, (k + 1) * TWO_PI, h, settings)
        out.append(s)
    return out


def count_distinct(values, tol: float = CLUSTER_TOL) -> int:
    """Number of clusters after chaining sorted values closer than ``tol``."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return 0
    return 1 + int(np.count_nonzero(np.diff(v) > tol))


def _map_ordered(fn, items, workers):
    if workers is None or workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def bifurcation_scan(
    x_lo: float,
    x_hi: float,
    n_x: int,
    initial: PhaseState,
    n_transient: int,
    n_keep: int,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    base: CompassParams = CompassParams(),
    workers: int | None = None,
) -> BifurcationDataset:
    if not x_lo < x_hi:
        raise DomainError(f"need x_lo < x_hi, got [{x_lo}, {x_hi}]")
    if n_x < 2:
        raise DomainError("need n_x >= 2")
    xs = np.linspace(x_lo, x_hi, n_x)
    return scan_grid(xs, initial, n_transient, n_keep, settings, base, workers)


def scan_grid(xs, initial, n_transient, n_keep, settings=DEFAULT_SETTINGS, base=CompassParams(), workers=None):
    """Bifurcation dataset over an explicit grid; results are assembled in grid order."""
    xs = np.asarray(xs, dtype=float)
    if xs.size > 1 and not np.all(np.diff(xs) > 0):
        raise DomainError("x grid must be strictly increasing")

    def one(x):
        sec = stroboscopic_section(base.with_x(float(x)), initial, n_transient, n_keep, settings)
        return np.array([s.wrapped for s in sec])

    return BifurcationDataset(xs, tuple(_map_ordered(one, xs, workers)))


def largest_lyapunov(
    params: CompassParams,
    initial: PhaseState,
    ls: LyapunovSettings = LyapunovSettings(),
    settings: IntegratorSettings = DEFAULT_SETTINGS,
) -> float:
    m = settings.steps_for(ls.renorm_interval)
    h = ls.renorm_interval / m
    if settings.method == "rk4":
        lam, bad = _kernels.benettin(
            params.alpha, params.P, params.x, initial.theta, initial.theta_dot,
            ls.d0, h, m, ls.n_transient, ls.n_total,
        )
        if bad >= 0:
            raise NonFiniteState(bad * h)
        return float(lam)

    ref = initial
    comp = PhaseState(initial.theta + ls.d0, initial.theta_dot)
    acc = 0.0
    for j in range(ls.n_total):
        t0, t1 = j * ls.renorm_interval, (j + 1) * ls.renorm_interval
        ref = advance_span(params, ref, t0, t1, h, settings)
        comp = advance_span(params, comp, t0, t1, h, settings)
        dth, dom = comp.theta - ref.theta, comp.theta_dot - ref.theta_dot
        dist = math.hypot(dth, dom)
        if j >= ls.n_transient:
            acc += math.log(dist / ls.d0)
        scale = ls.d0 / dist
        comp = PhaseState(ref.theta + dth * scale, ref.theta_dot + dom * scale)
    return acc / ((ls.n_total - ls.n_transient) * ls.renorm_interval)


def lyapunov_scan(
    xs,
    initial: PhaseState,
    ls: LyapunovSettings = LyapunovSettings(),
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    base: CompassParams = CompassParams(),
    workers: int | None = None,
) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    return np.array(
        _map_ordered(lambda x: largest_lyapunov(base.with_x(float(x)), initial, ls, settings), xs, workers)
    )


def chaos_onset(xs, exponents) -> float | None:
    """Smallest grid value with a positive exponent, or None."""
    for x, lam in zip(xs, exponents):
        if lam > 0:
            return float(x)
    return None


def divergence_curve(
    params: CompassParams,
    init_a: PhaseState,
    init_b: PhaseState,
    horizon: float,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
) -> list[tuple[float, float]]:
    """|wrap(theta_a - theta_b)| once per drive period, plus the value at ``horizon``."""
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    marks = [TWO_PI * k for k in range(0, int(horizon // TWO_PI) + 1)]
    if marks[-1] < horizon:
        marks.append(horizon)
    out = [(0.0, abs(wrap_angle(init_a.theta - init_b.theta)))]
    a, b = init_a, init_b
    for t0, t1 in zip(marks, marks[1:]):
        a = _advance(params, a, t0, t1, settings)
        b = _advance(params, b, t0, t1, settings)
        out.append((t1, abs(wrap_angle(a.theta - b.theta))))
    return out


def _advance(params, s, t0, t1, settings):
    # full periods share the stroboscopic grid; the trailing partial period gets its own
    span = t1 - t0
    n = settings.steps_for(span)
    h = span / n
    if settings.method == "rk4":
        th, om, bad = _kernels.advance_from(params.alpha, params.P, params.x, s.theta, s.theta_dot, t0, h, n)
        if bad >= 0:
            raise NonFiniteState(t0 + bad * h)
        return PhaseState(th, om)
    return advance_span(params, s, t0, t1, h, settings)
