"""Compiled RK4 kernels for the driven-compass equation.

Time is always reconstructed as ``t = k * h`` from the global step index so
that long runs do not accumulate rounding in the clock.
"""
import math

import numba


@numba.njit(cache=True, nogil=True)
def _accel(alpha, P, x, th, om, t):
    return -alpha * om - x * math.sin(th) - P * math.sin(th - t)


@numba.njit(cache=True, nogil=True)
def rk4_step(alpha, P, x, th, om, t, h):
    half = 0.5 * h
    k1a = om
    k1b = _accel(alpha, P, x, th, om, t)
    th2 = th + half * k1a
    om2 = om + half * k1b
    k2a = om2
    k2b = _accel(alpha, P, x, th2, om2, t + half)
    th3 = th + half * k2a
    om3 = om + half * k2b
    k3a = om3
    k3b = _accel(alpha, P, x, th3, om3, t + half)
    th4 = th + h * k3a
    om4 = om + h * k3b
    k4a = om4
    k4b = _accel(alpha, P, x, th4, om4, t + h)
    th = th + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    om = om + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    return th, om


@numba.njit(cache=True, nogil=True)
def advance(alpha, P, x, th, om, k0, h, n):
    """Take ``n`` steps starting at step index ``k0``.

    Returns ``(theta, theta_dot, bad)`` where ``bad`` is the index of the first
    step that produced a non-finite state, or -1.
    """
    for k in range(k0, k0 + n):
        th, om = rk4_step(alpha, P, x, th, om, k * h, h)
        if not (math.isfinite(th) and math.isfinite(om)):
            return th, om, k + 1
    return th, om, -1


@numba.njit(cache=True, nogil=True)
def record(alpha, P, x, th, om, h, n, every, out):
    """Integrate ``n`` steps, writing ``(t, theta, theta_dot)`` rows into ``out``.

    Row 0 is the initial state; then one row every ``every`` steps, and the
    final step is always recorded.  Returns (rows written, bad step or -1).
    """
    out[0, 0] = 0.0
    out[0, 1] = th
    out[0, 2] = om
    row = 1
    for k in range(n):
        th, om = rk4_step(alpha, P, x, th, om, k * h, h)
        if not (math.isfinite(th) and math.isfinite(om)):
            return row, k + 1
        if (k + 1) % every == 0 or k + 1 == n:
            out[row, 0] = (k + 1) * h
            out[row, 1] = th
            out[row, 2] = om
            row += 1
    return row, -1


@numba.njit(cache=True, nogil=True)
def benettin(alpha, P, x, th, om, d0, h, m, n_transient, n_total):
    """Two-trajectory largest Lyapunov exponent.

    The companion starts offset by ``d0`` along theta and is pulled back to
    distance ``d0`` every ``m`` steps.  Log stretches of the last
    ``n_total - n_transient`` intervals are averaged.  Returns (exponent, bad).
    """
    cth = th + d0
    com = om
    acc = 0.0
    for j in range(n_total):
        k0 = j * m
        th, om, bad = advance(alpha, P, x, th, om, k0, h, m)
        if bad >= 0:
            return math.nan, bad
        cth, com, bad = advance(alpha, P, x, cth, com, k0, h, m)
        if bad >= 0:
            return math.nan, bad
        dth = cth - th
        dom = com - om
        dist = math.sqrt(dth * dth + dom * dom)
        if j >= n_transient:
            acc += math.log(dist / d0)
        scale = d0 / dist
        cth = th + dth * scale
        com = om + dom * scale
    return acc / ((n_total - n_transient) * m * h), -1


@numba.njit(cache=True, nogil=True)
def advance_from(alpha, P, x, th, om, t0, h, n):
    """Like :func:`advance` but with the clock at ``t0 + k * h``."""
    for k in range(n):
        th, om = rk4_step(alpha, P, x, th, om, t0 + k * h, h)
        if not (math.isfinite(th) and math.isfinite(om)):
            return th, om, k + 1
    return th, om, -1
