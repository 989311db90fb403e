"""CSV/JSON serialisation of results."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict

from .dynamics import BifurcationDataset
from .eprb import COMBOS, BellResult, CorrelationResult, RandomSwitchingResult
from .ode import PhaseState


def fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def state_list(s: PhaseState) -> list[float]:
    return [s.theta, s.theta_dot]


def correlation_dict(c: CorrelationResult, setting_I: float, setting_II: float) -> dict:
    return {
        "setting_I": setting_I,
        "setting_II": setting_II,
        "M": c.M,
        "N": c.N,
        "members": [
            {
                "lambda_L": state_list(r.lambda_L),
                "lambda_NL_I": state_list(r.lambda_NL_I),
                "lambda_NL_II": state_list(r.lambda_NL_II),
                "theta_I": r.theta_I,
                "theta_II": r.theta_II,
                "A_I": r.A_I,
                "A_II": r.A_II,
                "product": r.product,
            }
            for r in c.records
        ],
    }


def bell_dict(res: BellResult, pairs) -> dict:
    out = {
        "runs": [correlation_dict(c, *p) for c, p in zip(res.correlations, pairs)],
        "S": res.S,
    }
    if not math.isnan(res.t_m):
        out["t_m"] = res.t_m
    return out


def bell_csv(res: BellResult, pairs) -> str:
    text = csv_text(
        ["run", "setting_I", "setting_II", "M"],
        [(i + 1, p[0], p[1], c.M) for i, (c, p) in enumerate(zip(res.correlations, pairs))],
    )
    return text + f"S,{fmt(res.S)}\n"


def random_dict(res: RandomSwitchingResult, menu) -> dict:
    return {
        "seed": res.seed,
        "n_pairs": res.n_pairs,
        "menu": asdict(menu),
        "combos": [
            {"combo": c, "setting_I": menu.pair(c)[0], "setting_II": menu.pair(c)[1],
             "count": res.counts[c], "M": res.M[c]}
            for c in COMBOS
        ],
        "S": res.S,
    }


def random_csv(res: RandomSwitchingResult, menu) -> str:
    text = csv_text(
        ["run", "setting_I", "setting_II", "M", "count"],
        [(c, *menu.pair(c), res.M[c], res.counts[c]) for c in COMBOS],
    )
    return text + f"S,{fmt(res.S)}\n"


def bifurcation_csv(data: BifurcationDataset) -> str:
    return csv_text(["x", "theta_wrapped"], data.rows())


def cos_csv(report) -> str:
    return csv_text(["a", "b", "target_cos", "discretized", "M", "abs_err"], report.csv_rows())
