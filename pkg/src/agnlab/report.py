"""CSV and JSON emission.

CSV files have a header row and a fixed column order; floats are written
with 17 significant digits so regression diffs are exact.
"""

from __future__ import annotations

import csv
import io
import json
import math

from .model import GainSequence, Problem, RateResult, RecursionTrace

RATE_COLUMNS = ("problem", "t", "g", "sigma", "kappa_t", "chi",
                "mi_increment", "cumulative_rate", "rate", "rate_bits",
                "converged", "branch")


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[col]) for col in columns])
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def to_json(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True,
                      allow_nan=False) + "\n"


def rate_rows(result: RateResult):
    trace = result.trace
    running = 0.0
    rows = []
    for i in range(result.n):
        running += trace.mi_increments[i]
        rows.append({
            "problem": result.problem.value if result.problem else "",
            "t": i + 1,
            "g": result.gains.g[i],
            "sigma": trace.sigma[i + 1],
            "kappa_t": trace.kappa_t[i],
            "chi": trace.chi[i - 1] if i > 0 else None,
            "mi_increment": trace.mi_increments[i],
            "cumulative_rate": running / (i + 1),
            "rate": result.rate,
            "rate_bits": result.rate_bits,
            "converged": result.converged,
            "branch": result.branch,
        })
    return rows


def rate_result_to_dict(result: RateResult) -> dict:
    t = result.trace
    return {
        "problem": result.problem.value if result.problem else None,
        "rate": result.rate,
        "rate_bits": result.rate_bits,
        "total_mi": result.total_mi,
        "converged": result.converged,
        "branch": result.branch,
        "sign_pattern": list(result.sign_pattern)
        if result.sign_pattern is not None else None,
        "gains": list(result.gains.g),
        "trace": {
            "sigma": list(t.sigma),
            "kappa_t": list(t.kappa_t),
            "chi": list(t.chi),
            "mi_increments": list(t.mi_increments),
            "snr": list(t.snr) if t.snr is not None else None,
        },
    }


def rate_result_from_dict(data: dict) -> RateResult:
    t = data["trace"]
    nan_if_none = lambda seq: tuple(math.nan if v is None else float(v)
                                    for v in seq)
    trace = RecursionTrace(
        sigma=nan_if_none(t["sigma"]),
        kappa_t=nan_if_none(t["kappa_t"]),
        chi=nan_if_none(t["chi"]),
        mi_increments=nan_if_none(t["mi_increments"]),
        snr=nan_if_none(t["snr"]) if t.get("snr") is not None else None,
    )
    pattern = data.get("sign_pattern")
    return RateResult(
        rate=float(data["rate"]),
        total_mi=float(data["total_mi"]),
        trace=trace,
        gains=GainSequence(tuple(data["gains"])),
        problem=Problem(data["problem"]) if data.get("problem") else None,
        converged=bool(data.get("converged", True)),
        branch=data.get("branch"),
        sign_pattern=tuple(pattern) if pattern is not None else None,
    )
