"""A bistable flow whose basin boundary does not depend on the setting.

    dlambda/dt = x * lambda * (1 - lambda**2),   x in Omega = [0.5, 2.0]

lambda = 0 is an invariant repeller separating the attractors -1 and +1 for
every x, so the sign of the initial value alone decides the outcome, at any
sufficiently late measuring time.  Local hidden variables sitting on the
separatrix are therefore steered by corrections of any size whatsoever.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

from scipy.integrate import solve_ivp

from .errors import DomainError, NonFiniteState, OnSeparatrix
from .synthesis import DEFAULT_GRID, assign_signs

OMEGA = (0.5, 2.0)


def _check_x(x: float, omega=OMEGA):
    if not omega[0] <= x <= omega[1]:
        raise DomainError(f"x={x!r} outside Omega={omega}")


def project(x: float, lambda0: float, omega=OMEGA) -> int:
    """+1 for the attractor at +1, -1 for the one at -1."""
    _check_x(x, omega)
    if lambda0 == 0:
        raise OnSeparatrix(f"lambda0 = 0 lies on the separatrix (x={x!r})")
    return 1 if lambda0 > 0 else -1


def flow_state(x: float, lambda0: float, t: float, omega=OMEGA, rtol: float = 1e-10) -> float:
    """Numerical solution at time ``t``; a witness for :func:`project`."""
    _check_x(x, omega)
    if t < 0:
        raise DomainError("t must be >= 0")
    if t == 0 or lambda0 == 0:
        return float(lambda0)
    sol = solve_ivp(
        lambda _t, y: x * y * (1 - y * y),
        (0.0, t),
        [lambda0],
        method="DOP853",
        rtol=rtol,
        atol=abs(lambda0) * 1e-12,
    )
    val = float(sol.y[0, -1])
    if not sol.success or not math.isfinite(val):
        raise NonFiniteState(float(sol.t[-1]), f"separatrix flow failed: {sol.message}")
    return val


def angle_to_omega(phi: float, omega=OMEGA) -> float:
    if not 0 <= phi <= math.pi / 2:
        raise DomainError(f"angle {phi!r} outside [0, pi/2]")
    return omega[0] + (phi / (math.pi / 2)) * (omega[1] - omega[0])


@dataclass
class ExactPair:
    a: float
    b: float
    x_a: float
    x_b: float
    target_cos: float
    discretized: float
    M: float
    abs_err: float


@dataclass
class ExactReport:
    N: int
    epsilon: float
    omega: tuple
    pairs: list[ExactPair] = field(default_factory=list)

    @property
    def max_abs_err(self) -> float:
        return max(p.abs_err for p in self.pairs)

    def m_table(self) -> dict:
        return {(p.a, p.b): p.M for p in self.pairs}

    def csv_rows(self):
        for p in self.pairs:
            yield (p.a, p.b, p.target_cos, p.discretized, p.M, p.abs_err)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "epsilon": self.epsilon,
            "omega": list(self.omega),
            "local_hidden_variables": "all on the separatrix (lambda_L = 0)",
            "discretization_floor": 1.0 / self.N,
            "max_abs_err": self.max_abs_err,
            "pairs": [asdict(p) for p in self.pairs],
        }


def reproduce_cos_exact(
    grid: Sequence[float] = DEFAULT_GRID, N: int = 8, epsilon: float = 1e-3, omega=OMEGA
) -> ExactReport:
    """Every member starts on the separatrix; corrections are +/- epsilon/2."""
    if N < 1:
        raise DomainError("N must be >= 1")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    half = epsilon / 2
    if half == 0:
        raise DomainError(f"epsilon={epsilon!r} underflows when halved")
    report = ExactReport(N, epsilon, tuple(omega))
    for s in assign_signs(grid, N):
        t = s.target
        x_a, x_b = angle_to_omega(t.a, omega), angle_to_omega(t.b, omega)
        total = 0
        for A1, A2 in zip(s.A_I, s.A_II):
            total += project(x_a, A1 * half, omega) * project(x_b, A2 * half, omega)
        M = total / N
        report.pairs.append(ExactPair(t.a, t.b, x_a, x_b, t.target, t.discretized, M, abs(M - t.target)))
    return report


def chsh_from_table(table: dict, a: float, a_prime: float, b: float, b_prime: float) -> float:
    return table[(a, b)] - table[(a, b_prime)] + table[(a_prime, b)] + table[(a_prime, b_prime)]

