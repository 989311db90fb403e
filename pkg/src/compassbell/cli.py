"""Batch command-line front end.

    compassbell <command> [--config FILE|default] [--out FILE] [--format csv|json] [--seed N]

Exit status: 0 on success, 1 for configuration/usage errors, 2 for runtime
failures of the numerics (no flip found, empty random-switching bin,
non-finite state, no Bell violation found).
"""
from __future__ import annotations

import argparse
import math
import sys

from . import config as cfgmod
from . import export
from .dynamics import (
    LyapunovSettings,
    bifurcation_scan,
    count_distinct,
    largest_lyapunov,
    stroboscopic_section,
)
from .eprb import (
    Dichotomizer,
    Ensemble,
    ExperimentPlan,
    RunSpec,
    SettingsMenu,
    equal_settings_plan,
    escalate_t_m,
    run_plan,
    run_random_switching,
    scan_measuring_time,
    table1_drift_plan,
    weak_drift_plan,
)
from .errors import CompassBellError, ConfigError, DomainError, NoFlipFound, NoViolationFound
from .ode import TWO_PI, CompassParams, IntegratorSettings, PhaseState, integrate, state_at
from .separatrix import chsh_from_table, reproduce_cos_exact
from .synthesis import AngleMap, PerturbationBudget, reproduce_cos, switching_rule

CHSH_ANGLES = (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="compassbell", description="Driven-compass EPRB/CHSH experiments.")
    p.add_argument("command", choices=cfgmod.COMMANDS)
    p.add_argument("--config", default="default", help="JSON config file, or 'default'")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    return p


def _params(cfg, x=0.16):
    return CompassParams(cfg["model"]["alpha"], cfg["model"]["P"], x)


def _settings(cfg):
    return IntegratorSettings(**cfg["integrator"])


def _dich(cfg):
    return Dichotomizer(**cfg["dichotomizer"])


def _states(rows):
    return tuple(PhaseState(*r) for r in rows)


def cmd_traj(cfg):
    c = cfg["traj"]
    traj = integrate(_params(cfg, c["x"]), PhaseState(*c["initial"]), c["t_end"], _settings(cfg), c["sample_every"])
    rows = [[float(t), float(th), float(om), tw]
            for t, th, om, tw in zip(traj.times, traj.theta, traj.theta_dot, traj.theta_wrapped)]
    return {"samples": rows}, traj.to_csv()


def cmd_table1(cfg):
    c = cfg["table1"]
    t_m = cfg["dichotomizer"]["t_m"]
    settings = _settings(cfg)
    cells = []
    for x in c["x_values"]:
        for init in c["initials"]:
            s = state_at(_params(cfg, x), PhaseState(*init), t_m, settings)
            cells.append({"x": x, "initial": list(init), "theta_wrapped": s.wrapped})
    csv = export.csv_text(
        ["x", "theta0", "theta_dot0", "theta_wrapped"],
        [(e["x"], *e["initial"], e["theta_wrapped"]) for e in cells],
    )
    return {"t_m": t_m, "cells": cells}, csv


def cmd_strobe(cfg):
    c = cfg["strobe"]
    sec = stroboscopic_section(_params(cfg, c["x"]), PhaseState(*c["initial"]), c["n_transient"], c["n_keep"],
                               _settings(cfg))
    rows = [(c["n_transient"] + i + 1, (c["n_transient"] + i + 1) * TWO_PI, s.theta, s.theta_dot, s.wrapped)
            for i, s in enumerate(sec)]
    doc = {
        "samples": [list(r) for r in rows],
        "distinct": count_distinct([s.wrapped for s in sec]),
    }
    return doc, export.csv_text(["k", "t", "theta", "theta_dot", "theta_wrapped"], rows)


def cmd_lyap(cfg):
    c = cfg["lyap"]
    ls = LyapunovSettings(c["d0"], c["renorm_interval"], c["transient"], c["total"])
    settings = _settings(cfg)
    rows = [(x, largest_lyapunov(_params(cfg, x), PhaseState(*c["initial"]), ls, settings)) for x in c["x_values"]]
    return {"exponents": [{"x": x, "lambda_max": v} for x, v in rows]}, export.csv_text(["x", "lambda_max"], rows)


def cmd_bifurcate(cfg):
    c = cfg["bifurcate"]
    data = bifurcation_scan(c["x_lo"], c["x_hi"], c["n_x"], PhaseState(*c["initial"]), c["n_transient"],
                            c["n_keep"], _settings(cfg), _params(cfg))
    doc = {
        "x": [float(x) for x in data.x],
        "theta_wrapped": [[float(v) for v in s] for s in data.samples],
        "distinct": data.distinct_counts(c["cluster_tol"]),
    }
    return doc, export.bifurcation_csv(data)


def _static_plan(cfg):
    c = cfg["bell_static"]
    xy = (c["a"], c["b"], c["a_prime"], c["b_prime"])
    kw = {"dichotomizer": _dich(cfg), "settings": _settings(cfg), "base": _params(cfg)}
    if c["runs"] is None:
        return ExperimentPlan.uniform(*xy, Ensemble(_states(c["ensemble"])), **kw)
    pairs = ((xy[0], xy[1]), (xy[0], xy[3]), (xy[2], xy[1]), (xy[2], xy[3]))
    runs = []
    for (sa, sb), r in zip(pairs, c["runs"]):
        ci, cii = r.get("corrections_I"), r.get("corrections_II")
        runs.append(RunSpec(sa, sb, Ensemble(_states(r["ensemble"])),
                            None if ci is None else _states(ci), None if cii is None else _states(cii)))
    return ExperimentPlan(*xy, tuple(runs), **kw)


def _bell_out(res, plan, extra=None):
    doc = {"settings": {"a": plan.a, "b": plan.b, "a_prime": plan.a_prime, "b_prime": plan.b_prime},
           "delta": plan.dichotomizer.delta, "t_m": res.t_m, **export.bell_dict(res, plan.pairs)}
    doc.update(extra or {})
    return doc, export.bell_csv(res, plan.pairs)


def cmd_bell_static(cfg):
    plan = _static_plan(cfg)
    return _bell_out(run_plan(plan), plan)


def cmd_bell_drift(cfg):
    c = cfg["bell_drift"]
    settings = _settings(cfg)
    d = _dich(cfg)
    scenario = c["scenario"]
    if scenario == "table1":
        offset = 1e-3 if c["offset"] is None else c["offset"]
        plan = table1_drift_plan(offset, d, settings, base=_params(cfg))
        res = escalate_t_m(plan, t_cap=c["t_cap"])
    elif scenario == "weak":
        offset = 1e-5 if c["offset"] is None else c["offset"]
        # the weak scenario always uses delta = 0.001
        plan = weak_drift_plan(offset, Dichotomizer(0.001, d.t_m), settings, base=_params(cfg))
        res = scan_measuring_time(plan, c["scan_t_max"], t_min=c["scan_t_min"])
    else:
        offset = 1e-5 if c["offset"] is None else c["offset"]
        eq = c["equal_settings"]
        plan = equal_settings_plan(eq["x_a"], eq["x_b"], offset, d=d, settings=settings, base=_params(cfg))
        res = escalate_t_m(plan, t_cap=c["t_cap"])
    if res is None:
        raise NoViolationFound(f"scenario {scenario!r}: no measuring time with |S| = 4 found")
    plan = plan.with_t_m(res.t_m)
    return _bell_out(res, plan, {"scenario": scenario, "offset": offset})


def _synth(cfg):
    c = cfg["synth_cos"]
    lam = None if c["lambda_L"] is None else _states(c["lambda_L"])
    return reproduce_cos(
        AngleMap(c["x_lo"], c["x_hi"]), tuple(c["grid"]), lam, _dich(cfg),
        PerturbationBudget(c["epsilon"], c["resolution"], c["component"]), _settings(cfg), _params(cfg),
        c["t_m_cap"],
    )


def cmd_bell_random(cfg):
    c = cfg["bell_random"]
    d, settings = _dich(cfg), _settings(cfg)
    extra = {}
    if c["corrections"] == "synthesized":
        report = _synth(cfg)
        if report.failures:
            raise NoFlipFound(f"synthesis left {len(report.failures)} unsteered member(s)")
        ang = c["angles"]
        menu, rule = switching_rule(report, ang["a"], ang["a_prime"], ang["b"], ang["b_prime"])
        members = report.lambda_L
        d = d.with_t_m(report.t_m)
        extra = {"angles": ang, "t_m": report.t_m}
    else:
        menu = SettingsMenu(**c["menu"])
        members = _states(c["lambda_L"])
        rule = None
    kw = {} if rule is None else {"corrections_rule": rule}
    res = run_random_switching(menu, c["n_pairs"], cfg["seed"], members, d=d, settings=settings,
                               base=_params(cfg), **kw)
    doc = export.random_dict(res, menu)
    doc.update({"delta": d.delta, "t_m": d.t_m, **extra})
    return doc, export.random_csv(res, menu)


def cmd_synth_cos(cfg):
    report = _synth(cfg)
    return report.to_dict(), export.cos_csv(report), report.failures


def cmd_sep_cos(cfg):
    c = cfg["sep_cos"]
    report = reproduce_cos_exact(tuple(c["grid"]), c["N"], c["epsilon"], tuple(c["omega"]))
    doc = report.to_dict()
    table = report.m_table()
    if all((a, b) in table for a in CHSH_ANGLES for b in CHSH_ANGLES):
        doc["chsh"] = {"angles": list(CHSH_ANGLES), "S": chsh_from_table(table, *CHSH_ANGLES)}
    return doc, export.cos_csv(report)


HANDLERS = {
    "traj": cmd_traj,
    "table1": cmd_table1,
    "strobe": cmd_strobe,
    "lyap": cmd_lyap,
    "bifurcate": cmd_bifurcate,
    "bell-static": cmd_bell_static,
    "bell-drift": cmd_bell_drift,
    "bell-random": cmd_bell_random,
    "synth-cos": cmd_synth_cos,
    "sep-cos": cmd_sep_cos,
}


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        cfg = cfgmod.load(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
            cfgmod.validate(cfg)
    except ConfigError as exc:
        print(f"compassbell: config error: {exc}", file=sys.stderr)
        return 1

    try:
        out = HANDLERS[args.command](cfg)
    except DomainError as exc:
        print(f"compassbell: config error: {exc}", file=sys.stderr)
        return 1
    except CompassBellError as exc:
        print(f"compassbell: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    doc, csv = out[0], out[1]
    failures = out[2] if len(out) > 2 else None
    if args.format == "json":
        envelope = {"command": args.command, "config": cfg, "result": doc}
        cfgmod.validate(envelope, cfgmod.RESULT_SCHEMA)
        text = export.dumps(envelope)
    else:
        text = csv
    _write(text, args.out)
    if failures:
        print(f"compassbell: NoFlipFound: {len(failures)} member/side search(es) failed", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
