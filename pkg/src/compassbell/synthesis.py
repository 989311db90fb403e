"""Reproducing the quantum correlation cos 2(a - b) with tiny setting-dependent corrections.

Polariser angles in [0, pi/2] are mapped linearly onto a narrow window of
fixed-field strengths inside the chaotic regime.  For every ordered pair of
angles, the N ensemble members are assigned +/-1 products whose mean is the
closest achievable value to cos 2(a - b); a small offset of the initial
angular velocity is then searched for every member and side so that the
simulated outcome matches its assignment.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from typing import Literal

from .errors import DomainError, NoFlipFound
from .eprb import (
    Dichotomizer,
    Ensemble,
    RunSpec,
    SettingsMenu,
    correlation,
    default_members,
    measure_side,
)
from .ode import DEFAULT_SETTINGS, ZERO_STATE, CompassParams, IntegratorSettings, PhaseState

DEFAULT_GRID = (0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8)
_TIE = 1e-12


@dataclass(frozen=True)
class AngleMap:
    x_lo: float = 0.2290
    x_hi: float = 0.2293

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise DomainError("need x_lo < x_hi")


def angle_to_x(phi: float, amap: AngleMap = AngleMap()) -> float:
    if not 0 <= phi <= math.pi / 2:
        raise DomainError(f"angle {phi!r} outside [0, pi/2]")
    return amap.x_lo + (phi / (math.pi / 2)) * (amap.x_hi - amap.x_lo)


@dataclass(frozen=True)
class PairTarget:
    a: float
    b: float
    target: float
    plus: int
    N: int

    @property
    def discretized(self) -> float:
        return (2 * self.plus - self.N) / self.N


def nearest_plus_count(c: float, N: int) -> int:
    """Number of +1 products out of N whose mean is closest to ``c``; ties go to more +1."""
    best, best_err = None, math.inf
    for p in range(N + 1):
        err = abs((2 * p - N) / N - c)
        if err < best_err - _TIE or (abs(err - best_err) <= _TIE and p > best):
            best, best_err = p, err
    return best


def target_table(grid: Sequence[float], N: int) -> list[PairTarget]:
    if N < 1:
        raise DomainError("N must be >= 1")
    return [PairTarget(a, b, math.cos(2 * (a - b)), nearest_plus_count(math.cos(2 * (a - b)), N), N)
            for a in grid for b in grid]


@dataclass(frozen=True)
class PairSigns:
    target: PairTarget
    products: tuple[int, ...]
    A_I: tuple[int, ...]
    A_II: tuple[int, ...]


def assign_signs(
    grid: Sequence[float], N: int, first_side: Sequence[int] | None = None
) -> list[PairSigns]:
    """Desired products per ordered pair: members 1..p get +1, the rest -1.

    The split into per-side outcomes fixes side I to ``first_side`` (default
    all +1) and sets side II to ``product * A_I``.
    """
    A_I = tuple(first_side) if first_side is not None else (1,) * N
    if len(A_I) != N:
        raise DomainError("first_side must have N entries")
    out = []
    for t in target_table(grid, N):
        products = (1,) * t.plus + (-1,) * (N - t.plus)
        out.append(PairSigns(t, products, A_I, tuple(p * s for p, s in zip(products, A_I))))
    return out


@dataclass(frozen=True)
class PerturbationBudget:
    """Offsets +/-k*resolution, k = 1.., up to ``epsilon`` on one phase-space component."""

    epsilon: float = 1e-3
    resolution: float = 1e-5
    component: Literal["theta_dot", "theta"] = "theta_dot"

    def __post_init__(self):
        if not (self.epsilon > 0 and self.resolution > 0):
            raise DomainError("epsilon and resolution must be positive")
        if self.component not in ("theta_dot", "theta"):
            raise DomainError(f"unknown component {self.component!r}")

    def offsets(self):
        for k in range(1, math.floor(self.epsilon / self.resolution + 1e-9) + 1):
            for sign in (1, -1):
                yield sign * k * self.resolution

    def state(self, offset: float) -> PhaseState:
        return PhaseState(0.0, offset) if self.component == "theta_dot" else PhaseState(offset, 0.0)


def find_perturbation(
    x_setting: float,
    lambda_L: PhaseState,
    desired: int,
    d: Dichotomizer = Dichotomizer(),
    budget: PerturbationBudget = PerturbationBudget(),
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    base: CompassParams = CompassParams(),
) -> PhaseState:
    """Smallest grid offset making the measured outcome equal ``desired``."""
    if desired not in (1, -1):
        raise DomainError("desired outcome must be +1 or -1")
    if measure_side(x_setting, lambda_L, ZERO_STATE, d, settings, base) == desired:
        return ZERO_STATE
    for off in budget.offsets():
        nl = budget.state(off)
        if measure_side(x_setting, lambda_L, nl, d, settings, base) == desired:
            return nl
    raise NoFlipFound(
        f"no offset with |{budget.component}| <= {budget.epsilon:g} gives {desired:+d} "
        f"at x={x_setting!r}, lambda_L={lambda_L.as_tuple()}, t_m={d.t_m:g}"
    )


@dataclass
class PairReport:
    a: float
    b: float
    x_a: float
    x_b: float
    target_cos: float
    discretized: float
    M: float
    abs_err: float
    corrections_I: list
    corrections_II: list


@dataclass
class CosReport:
    angle_map: AngleMap
    N: int
    delta: float
    t_m: float
    budget: PerturbationBudget
    lambda_L: tuple[PhaseState, ...] = ()
    pairs: list[PairReport] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    t_m_tried: list[float] = field(default_factory=list)

    @property
    def max_abs_err(self) -> float:
        return max(p.abs_err for p in self.pairs)

    @property
    def max_correction(self) -> float:
        return max(
            (max(abs(c[0]), abs(c[1])) for p in self.pairs for c in p.corrections_I + p.corrections_II),
            default=0.0,
        )

    @property
    def discretization_floor(self) -> float:
        return 1.0 / self.N

    def csv_rows(self):
        for p in self.pairs:
            yield (p.a, p.b, p.target_cos, p.discretized, p.M, p.abs_err)

    def to_dict(self) -> dict:
        return {
            "angle_map": asdict(self.angle_map),
            "N": self.N,
            "lambda_L": [m.as_tuple() for m in self.lambda_L],
            "delta": self.delta,
            "t_m": self.t_m,
            "t_m_tried": list(self.t_m_tried),
            "budget": asdict(self.budget),
            "discretization_floor": self.discretization_floor,
            "max_abs_err": self.max_abs_err,
            "max_correction": self.max_correction,
            "pairs": [asdict(p) for p in self.pairs],
            "failures": list(self.failures),
        }


def _attempt(amap, grid, members, d, budget, settings, base, stop_on_failure):
    N = len(members)
    xs = {phi: angle_to_x(phi, amap) for phi in grid}
    # side I keeps its unperturbed outcome per (setting, member); only side II is steered
    cache = {}

    def search(x, i, desired):
        key = (x, i, desired)
        if key not in cache:
            try:
                cache[key] = find_perturbation(x, members[i], desired, d, budget, settings, base)
            except NoFlipFound:
                cache[key] = None
        return cache[key]

    runs, failures = [], []
    for a in grid:
        first = [measure_side(xs[a], m, ZERO_STATE, d, settings, base) for m in members]
        row = [s for s in assign_signs(grid, N, first) if s.target.a == a]
        for s in row:
            corr_II = []
            for i in range(N):
                nl = search(xs[s.target.b], i, s.A_II[i])
                if nl is None:
                    failures.append({"a": s.target.a, "b": s.target.b, "member": i, "side": "II",
                                     "desired": s.A_II[i], "t_m": d.t_m})
                    if stop_on_failure:
                        return runs, failures
                    nl = ZERO_STATE
                corr_II.append(nl)
            runs.append((s, RunSpec(xs[s.target.a], xs[s.target.b], Ensemble(members),
                                    (ZERO_STATE,) * N, tuple(corr_II))))
    return runs, failures


def reproduce_cos(
    amap: AngleMap = AngleMap(),
    grid: Sequence[float] = DEFAULT_GRID,
    lambda_L: Sequence[PhaseState] | None = None,
    d: Dichotomizer = Dichotomizer(0.3, 100.0),
    budget: PerturbationBudget = PerturbationBudget(),
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    base: CompassParams = CompassParams(),
    t_m_cap: float | None = 1600.0,
) -> CosReport:
    """Synthesise M(a, b) = cos 2(a - b) on ``grid``.

    If some member cannot be steered at the current measuring time, t_m is
    doubled for the whole table (up to ``t_m_cap``; None disables escalation).
    An attempt is abandoned at its first failure; failures left at the
    final t_m are reported with a zero correction in place.
    """
    members = tuple(lambda_L) if lambda_L is not None else default_members()
    N = len(members)
    tried = []
    while True:
        tried.append(d.t_m)
        final = t_m_cap is None or 2 * d.t_m > t_m_cap
        runs, failures = _attempt(amap, grid, members, d, budget, settings, base, not final)
        if not failures or final:
            break
        d = d.with_t_m(2 * d.t_m)

    report = CosReport(amap, N, d.delta, d.t_m, budget, members, failures=failures, t_m_tried=tried)
    for signs, run in runs:
        res = correlation(run, d, settings, base)
        t = signs.target
        report.pairs.append(PairReport(
            t.a, t.b, run.setting_I, run.setting_II, t.target, t.discretized, res.M, abs(res.M - t.target),
            [c.as_tuple() for c in run.corrections_I], [c.as_tuple() for c in run.corrections_II],
        ))
    return report


def switching_rule(report: CosReport, a: float, a_prime: float, b: float, b_prime: float):
    """Settings menu and corrections rule that replay a synthesised table pair by pair."""
    by_pair = {(p.a, p.b): p for p in report.pairs}
    angles = {"ab": (a, b), "ab'": (a, b_prime), "a'b": (a_prime, b), "a'b'": (a_prime, b_prime)}
    missing = [v for v in angles.values() if v not in by_pair]
    if missing:
        raise DomainError(f"angle pairs {missing} are not in the synthesised table")

    def rule(combo: str, member: int):
        p = by_pair[angles[combo]]
        return PhaseState(*p.corrections_I[member]), PhaseState(*p.corrections_II[member])

    menu = SettingsMenu(
        angle_to_x(a, report.angle_map), angle_to_x(a_prime, report.angle_map),
        angle_to_x(b, report.angle_map), angle_to_x(b_prime, report.angle_map),
    )
    return menu, rule
