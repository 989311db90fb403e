"""EPRB analogue built from pairs of driven compasses.

Each emitted "pair" is a shared initial condition (the hidden variable).
Compass I is run with fixed-field strength ``a`` and compass II with ``b``;
at the measuring time each side reports +1 if the wrapped needle angle is
within ``delta`` of zero and -1 otherwise.  Correlations are ensemble means of
the product of outcomes, and four of them combine into the CHSH quantity

    S = M(a, b) - M(a, b') + M(a', b) + M(a', b').
"""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, EmptyBin
from .ode import (
    DEFAULT_SETTINGS,
    ZERO_STATE,
    CompassParams,
    IntegratorSettings,
    PhaseState,
    integrate,
    state_at,
)

COMBOS = ("ab", "ab'", "a'b", "a'b'")
CHSH_SIGNS = (1, -1, 1, 1)


@dataclass(frozen=True)
class Dichotomizer:
    delta: float = 0.3
    t_m: float = 100.0

    def __post_init__(self):
        if not (self.delta > 0 and self.t_m > 0):
            raise DomainError("delta and t_m must be positive")

    def with_t_m(self, t_m: float) -> Dichotomizer:
        return Dichotomizer(self.delta, t_m)


@dataclass(frozen=True)
class Ensemble:
    """Equal-weight mixture of point masses on the local hidden variables."""

    members: tuple[PhaseState, ...]

    def __post_init__(self):
        if len(self.members) < 1:
            raise DomainError("an ensemble needs at least one member")
        object.__setattr__(self, "members", tuple(self.members))

    def __len__(self):
        return len(self.members)

    @classmethod
    def single(cls, theta: float, theta_dot: float = 0.0) -> Ensemble:
        return cls((PhaseState(theta, theta_dot),))


def default_members(n: int = 8) -> tuple[PhaseState, ...]:
    """Local hidden variables ((94 + 2i) * 1e-3, 0) for i = 0..n-1."""
    return tuple(PhaseState((94 + 2 * i) * 1e-3, 0.0) for i in range(n))


def _check_corrections(corr, n, side):
    if corr is None:
        return None
    corr = tuple(corr)
    if len(corr) != n:
        raise DomainError(f"side {side}: {len(corr)} corrections for {n} members")
    return corr


@dataclass(frozen=True)
class RunSpec:
    setting_I: float
    setting_II: float
    ensemble: Ensemble
    corrections_I: tuple[PhaseState, ...] | None = None
    corrections_II: tuple[PhaseState, ...] | None = None

    def __post_init__(self):
        for s in (self.setting_I, self.setting_II):
            if not 0 <= s < 1:
                raise DomainError(f"setting {s!r} outside model range [0, 1)")
        n = len(self.ensemble)
        object.__setattr__(self, "corrections_I", _check_corrections(self.corrections_I, n, "I"))
        object.__setattr__(self, "corrections_II", _check_corrections(self.corrections_II, n, "II"))

    def correction(self, side: str, i: int) -> PhaseState:
        corr = self.corrections_I if side == "I" else self.corrections_II
        return ZERO_STATE if corr is None else corr[i]


@dataclass(frozen=True)
class MemberRecord:
    lambda_L: PhaseState
    lambda_NL_I: PhaseState
    lambda_NL_II: PhaseState
    theta_I: float
    theta_II: float
    A_I: int
    A_II: int

    @property
    def product(self) -> int:
        return self.A_I * self.A_II


@dataclass(frozen=True)
class CorrelationResult:
    M: float
    records: tuple[MemberRecord, ...]

    @property
    def N(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class ExperimentPlan:
    a: float
    b: float
    a_prime: float
    b_prime: float
    runs: tuple[RunSpec, RunSpec, RunSpec, RunSpec]
    dichotomizer: Dichotomizer = Dichotomizer()
    settings: IntegratorSettings = DEFAULT_SETTINGS
    base: CompassParams = CompassParams()

    def __post_init__(self):
        if len(self.runs) != 4:
            raise DomainError("a plan has exactly four runs")
        object.__setattr__(self, "runs", tuple(self.runs))
        for run, (sa, sb) in zip(self.runs, self.pairs):
            if (run.setting_I, run.setting_II) != (sa, sb):
                raise DomainError(
                    f"run settings ({run.setting_I}, {run.setting_II}) do not match pair ({sa}, {sb})"
                )

    @property
    def pairs(self):
        return ((self.a, self.b), (self.a, self.b_prime), (self.a_prime, self.b), (self.a_prime, self.b_prime))

    def with_t_m(self, t_m: float) -> ExperimentPlan:
        return ExperimentPlan(
            self.a, self.b, self.a_prime, self.b_prime, self.runs,
            self.dichotomizer.with_t_m(t_m), self.settings, self.base,
        )

    @classmethod
    def uniform(cls, a, b, a_prime, b_prime, ensemble, drift=None, **kw) -> ExperimentPlan:
        """Four runs sharing ``ensemble``; ``drift`` maps a run index (0..3) to its own ensemble."""
        drift = drift or {}
        pairs = ((a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime))
        runs = tuple(RunSpec(sa, sb, drift.get(i, ensemble)) for i, (sa, sb) in enumerate(pairs))
        return cls(a, b, a_prime, b_prime, runs, **kw)


@dataclass(frozen=True)
class BellResult:
    M1: CorrelationResult
    M2: CorrelationResult
    M3: CorrelationResult
    M4: CorrelationResult
    S: float
    t_m: float = field(default=math.nan)

    @property
    def correlations(self):
        return (self.M1, self.M2, self.M3, self.M4)


def dichotomize(theta_wrapped: float, delta: float) -> int:
    if not delta > 0:
        raise DomainError("delta must be positive")
    return 1 if abs(theta_wrapped) < delta else -1


@lru_cache(maxsize=65536)
def _measured_angle(params: CompassParams, start: PhaseState, t_m: float, settings: IntegratorSettings) -> float:
    return state_at(params, start, t_m, settings).wrapped


def measured_angle(
    x_setting: float,
    lambda_L: PhaseState,
    lambda_NL: PhaseState = ZERO_STATE,
    t_m: float = 100.0,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    base: CompassParams = CompassParams(),
) -> float:
    """Wrapped needle angle at ``t_m`` for the perturbed initial condition."""
    return _measured_angle(base.with_x(x_setting), lambda_L + lambda_NL, float(t_m), settings)


def measure_side(
    x_setting: float,
    lambda_L: PhaseState,
    lambda_NL: PhaseState = ZERO_STATE,
    d: Dichotomizer = Dichotomizer(),
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    base: CompassParams = CompassParams(),
) -> int:
    return dichotomize(measured_angle(x_setting, lambda_L, lambda_NL, d.t_m, settings, base), d.delta)


def correlation(
    run: RunSpec,
    d: Dichotomizer = Dichotomizer(),
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    base: CompassParams = CompassParams(),
    workers: int | None = None,
) -> CorrelationResult:
    def member(i):
        lam = run.ensemble.members[i]
        nl1, nl2 = run.correction("I", i), run.correction("II", i)
        th1 = measured_angle(run.setting_I, lam, nl1, d.t_m, settings, base)
        th2 = measured_angle(run.setting_II, lam, nl2, d.t_m, settings, base)
        return MemberRecord(lam, nl1, nl2, th1, th2, dichotomize(th1, d.delta), dichotomize(th2, d.delta))

    idx = range(len(run.ensemble))
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            records = tuple(ex.map(member, idx))
    else:
        records = tuple(member(i) for i in idx)
    return CorrelationResult(mean_product([r.product for r in records]), records)


def mean_product(products: Sequence[int]) -> float:
    # integer sum first: M * N is then exactly an integer
    return sum(products) / len(products)


def bell_s(m1: float, m2: float, m3: float, m4: float) -> float:
    for m in (m1, m2, m3, m4):
        if not -1 <= m <= 1:
            raise DomainError(f"correlation {m!r} outside [-1, 1]")
    return m1 - m2 + m3 + m4


def run_plan(plan: ExperimentPlan, workers: int | None = None) -> BellResult:
    cs = [correlation(run, plan.dichotomizer, plan.settings, plan.base, workers) for run in plan.runs]
    return BellResult(*cs, S=bell_s(*(c.M for c in cs)), t_m=plan.dichotomizer.t_m)


# -- reference scenarios ------------------------------------------------------

TABLE1_SETTINGS = (0.160, 0.170, 0.230, 0.232)
TABLE1_LAMBDA = PhaseState(0.6, 0.0)


def table1_drift_plan(
    offset: float = 1e-3,
    d: Dichotomizer = Dichotomizer(0.3, 100.0),
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    settings_xy=TABLE1_SETTINGS,
    drift_run: int = 3,
    base: CompassParams = CompassParams(),
) -> ExperimentPlan:
    """Runs share lambda = (0.6, 0) except ``drift_run`` which sees (0.6, offset)."""
    ensemble = Ensemble((TABLE1_LAMBDA,))
    drifted = Ensemble((TABLE1_LAMBDA + PhaseState(0.0, offset),))
    return ExperimentPlan.uniform(
        *settings_xy, ensemble, drift={drift_run: drifted}, dichotomizer=d, settings=settings, base=base
    )


WEAK_SETTINGS = (0.16007, 0.16008, 0.16009, 0.230069)


def weak_drift_plan(
    offset: float = 1e-5,
    d: Dichotomizer = Dichotomizer(0.001, 100.0),
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    base: CompassParams = CompassParams(),
) -> ExperimentPlan:
    """Nearly equal regular settings plus one chaotic b'; run 2 is drifted."""
    return table1_drift_plan(offset, d, settings, WEAK_SETTINGS, drift_run=1, base=base)


def equal_settings_plan(
    x_a: float,
    x_b: float,
    offset: float,
    lam: PhaseState = TABLE1_LAMBDA,
    d: Dichotomizer = Dichotomizer(),
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    base: CompassParams = CompassParams(),
) -> ExperimentPlan:
    """a = a', b = b'; only run 2 sees the drifted hidden variable."""
    return ExperimentPlan.uniform(
        x_a, x_b, x_a, x_b, Ensemble((lam,)),
        drift={1: Ensemble((lam + PhaseState(0.0, offset),))}, dichotomizer=d, settings=settings, base=base,
    )


def escalate_t_m(
    plan: ExperimentPlan, target: float = 4.0, t_start: float | None = None, t_cap: float = 3200.0
) -> BellResult | None:
    """Double the measuring time from ``t_start`` until |S| reaches ``target`` or ``t_cap`` is passed."""
    t = t_start or plan.dichotomizer.t_m
    while t <= t_cap:
        res = run_plan(plan.with_t_m(t))
        if abs(res.S) >= target:
            return res
        t *= 2
    return None


def _side_trajectories(plan: ExperimentPlan, t_max: float):
    seen = {}
    for run in plan.runs:
        for i, lam in enumerate(run.ensemble.members):
            for side, x in (("I", run.setting_I), ("II", run.setting_II)):
                key = (x, lam + run.correction(side, i))
                if key not in seen:
                    traj = integrate(plan.base.with_x(x), key[1], t_max, plan.settings)
                    seen[key] = traj
    return seen


def scan_measuring_time(
    plan: ExperimentPlan, t_max: float, target: float = 4.0, t_min: float = 0.0
) -> BellResult | None:
    """Earliest step time in [t_min, t_max] at which |S| reaches ``target``.

    Every distinct side trajectory is integrated once over [0, t_max] and S is
    evaluated at every step.  Candidates are confirmed with :func:`run_plan`
    at that measuring time before being returned.
    """
    trajs = _side_trajectories(plan, t_max)
    times = next(iter(trajs.values())).times
    delta = plan.dichotomizer.delta
    outcome = {}
    for key, traj in trajs.items():
        wrapped = np.pi - np.remainder(np.pi - traj.theta, 2 * np.pi)
        outcome[key] = np.where(np.abs(wrapped) < delta, 1, -1)
    S = np.zeros(times.shape)
    for sign, run in zip(CHSH_SIGNS, plan.runs):
        acc = np.zeros(times.shape, dtype=np.int64)
        for i, lam in enumerate(run.ensemble.members):
            acc += outcome[(run.setting_I, lam + run.correction("I", i))] * outcome[
                (run.setting_II, lam + run.correction("II", i))
            ]
        S += sign * acc / len(run.ensemble)
    hits = np.flatnonzero((np.abs(S) >= target) & (times >= t_min) & (times > 0))
    for k in hits:
        res = run_plan(plan.with_t_m(float(times[k])))
        if abs(res.S) >= target:
            return res
    return None


# -- random switching --------------------------------------------------------


@dataclass(frozen=True)
class SettingsMenu:
    a: float
    a_prime: float
    b: float
    b_prime: float

    def pair(self, combo: str) -> tuple[float, float]:
        return {
            "ab": (self.a, self.b),
            "ab'": (self.a, self.b_prime),
            "a'b": (self.a_prime, self.b),
            "a'b'": (self.a_prime, self.b_prime),
        }[combo]


CorrectionsRule = Callable[[str, int], tuple[PhaseState, PhaseState]]


def zero_rule(combo: str, member: int) -> tuple[PhaseState, PhaseState]:
    return ZERO_STATE, ZERO_STATE


@dataclass(frozen=True)
class RandomSwitchingResult:
    counts: dict
    M: dict
    S: float
    seed: int
    n_pairs: int


def run_random_switching(
    menu: SettingsMenu,
    n_pairs: int,
    seed: int,
    lambda_L: Sequence[PhaseState],
    corrections_rule: CorrectionsRule = zero_rule,
    d: Dichotomizer = Dichotomizer(),
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    base: CompassParams = CompassParams(),
) -> RandomSwitchingResult:
    """Each pair draws its own (a or a', b or b') with a seeded PCG64 stream.

    Pair i carries local hidden variable ``lambda_L[i % N]`` plus the
    setting-dependent correction ``corrections_rule(combo, i % N)``.  The clock
    restarts at the moment the settings are applied, so ``d.t_m`` is the
    evolution interval between that moment and detection.
    """
    if n_pairs < 1:
        raise DomainError("n_pairs must be >= 1")
    lambda_L = tuple(lambda_L)
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.integers(0, 2, size=(n_pairs, 2))
    sums = dict.fromkeys(COMBOS, 0)
    counts = dict.fromkeys(COMBOS, 0)
    for i, (pick_a, pick_b) in enumerate(draws):
        combo = ("a'" if pick_a else "a") + ("b'" if pick_b else "b")
        x_I, x_II = menu.pair(combo)
        member = i % len(lambda_L)
        nl1, nl2 = corrections_rule(combo, member)
        lam = lambda_L[member]
        A1 = measure_side(x_I, lam, nl1, d, settings, base)
        A2 = measure_side(x_II, lam, nl2, d, settings, base)
        sums[combo] += A1 * A2
        counts[combo] += 1
    empty = [c for c in COMBOS if counts[c] == 0]
    if empty:
        raise EmptyBin(empty)
    M = {c: sums[c] / counts[c] for c in COMBOS}
    return RandomSwitchingResult(counts, M, bell_s(*(M[c] for c in COMBOS)), seed, n_pairs)
