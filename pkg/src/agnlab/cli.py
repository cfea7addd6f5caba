"""Command-line front end.

Settings are resolved as: command-line flag > config file > built-in
default. The config file is flat ``key = value`` text (``#`` starts a
comment); its path comes from ``--config`` or the ``AGNLAB_CONFIG``
environment variable. Exit codes: 0 success, 1 invalid input, 2 solver
non-convergence (partial results are still written).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import report
from .asymptotics import chi_fixed_point_iteration, solve_asymptote
from .model import (ChannelParams, ConstraintKind, Problem, StateKind,
                    ValidationError, validate)
from .optimizer import (OptimizerConfig, SigmaUnderflowError, solve_b1,
                        solve_b2, solve_p1, solve_p2)
from .simulator import RngSpec, fragility_report

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2

DEFAULTS = {
    "n": "10",
    "c": "0.5",
    "kw": "1",
    "ktheta": "1",
    "kv1": "1",
    "kappa": "1",
    "constraint": "pointwise",
    "state": "known",
    "trials": "10000",
    "seed": "0",
    "eps": "1e-6",
    "format": "csv",
    "out": "",
    "problem": "",
    "restarts": "8",
    "max_iter": "20000",
    "tol": "1e-12",
    "sign_search_limit": "20",
    "exhaustive": "true",
    "n_list": "5,10,15,20",
    "b2_n_list": "10,20",
    "p2_n_list": "10",
    "parameter": "c",
    "grid": "0,0.25,0.5,0.75,1",
    "problems": "b2,p2,asymptote",
}

SWEEP_PARAMETERS = ("c", "kappa", "kw", "n")


class ConfigError(ValueError):
    pass


def read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def resolve(args) -> dict:
    settings = dict(DEFAULTS)
    path = args.config or os.environ.get("AGNLAB_CONFIG")
    if path:
        settings.update(read_config(path))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = str(value)
    return settings


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _per_step(values, n, name):
    if len(values) == 1:
        return tuple(values) * n
    if len(values) != n:
        raise ConfigError(f"{name} needs 1 or {n} values, got {len(values)}")
    return tuple(values)


def channel_params(s: dict, **override) -> ChannelParams:
    merged = dict(s, **{k: str(v) for k, v in override.items()})
    n = int(merged["n"])
    if n < 1:
        raise ValidationError("n must be a positive integer")
    return validate(ChannelParams(
        n=n,
        c=_per_step(_floats(merged["c"]), n, "c"),
        kw=_per_step(_floats(merged["kw"]), n, "kw"),
        kv1=float(merged["kv1"]),
        ktheta=float(merged["ktheta"]),
        kappa=float(merged["kappa"]),
        constraint_kind=ConstraintKind(merged["constraint"]),
        state_kind=StateKind(merged["state"]),
    ))


def optimizer_config(s: dict) -> OptimizerConfig:
    return OptimizerConfig(tol=float(s["tol"]), max_iter=int(s["max_iter"]),
                           sign_search_limit=int(s["sign_search_limit"]),
                           restarts=int(s["restarts"]), seed=int(s["seed"]),
                           exhaustive=_bool(s["exhaustive"]))


def solve(problem: Problem, params, cfg):
    if problem is Problem.B2:
        return solve_b2(params)
    return {Problem.B1: solve_b1, Problem.P1: solve_p1,
            Problem.P2: solve_p2}[problem](params, cfg)


def _emit(s, columns, rows, payload=None):
    if s["format"] == "json":
        text = report.to_json(payload if payload is not None else rows)
    elif s["format"] == "csv":
        text = report.to_csv(columns, rows)
    else:
        raise ConfigError(f"unknown format {s['format']!r}")
    if s["out"]:
        with open(s["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands ---------------------------------------------------------------

def cmd_rate(s):
    params = channel_params(s)
    name = s["problem"] or ("p1" if params.constraint_kind
                            is ConstraintKind.TOTAL_AVERAGE else "p2")
    if name not in ("b1", "b2", "p1", "p2"):
        raise ConfigError(f"unknown problem {name!r}")
    result = solve(Problem(name), params, optimizer_config(s))
    _emit(s, report.RATE_COLUMNS, report.rate_rows(result),
          report.rate_result_to_dict(result))
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_fig2(s):
    params = channel_params(s)
    b2 = solve_b2(params)
    p2 = solve_p2(params, optimizer_config(s))
    rows = [{"t": t + 1, "g_t_B2": b2.gains.g[t], "g_t_P2": p2.gains.g[t]}
            for t in range(params.n)]
    _emit(s, ("t", "g_t_B2", "g_t_P2"), rows)
    return EXIT_OK if p2.converged else EXIT_NONCONVERGED


def cmd_fig3(s):
    params = channel_params(s)
    cfg = optimizer_config(s)
    rows, ok = [], True
    for n in _ints(s["b2_n_list"]):
        r = solve_b2(params.with_horizon(n))
        rows.append({"label": f"B2@{n}", "n": n, "rate": r.rate})
    for n in _ints(s["p2_n_list"]):
        r = solve_p2(params.with_horizon(n), cfg)
        ok = ok and r.converged
        rows.append({"label": f"P2@{n}", "n": n, "rate": r.rate})
    asym = solve_asymptote(params.kappa, params.kw[-1], params.c[-1])
    rows.append({"label": "B_asymptote", "n": None, "rate": asym.rate})
    for row in rows:
        row["rate_bits"] = row["rate"] / math.log(2.0)
    _emit(s, ("label", "n", "rate", "rate_bits"), rows)
    return EXIT_OK if ok else EXIT_NONCONVERGED


FRAGILITY_COLUMNS = ("n", "g_n_abs", "amplification", "analytic_sigma_n",
                     "empirical_sigma_n", "excess_mse", "excess_stderr")


def cmd_fragility(s):
    params = channel_params(s)
    rows = fragility_report(params, float(s["eps"]), _ints(s["n_list"]),
                            rng=RngSpec(int(s["seed"])),
                            trials=int(s["trials"]))
    _emit(s, FRAGILITY_COLUMNS, [vars(r) for r in rows])
    return EXIT_OK


def cmd_sweep(s):
    parameter = s["parameter"]
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"cannot sweep {parameter!r}; "
                          f"choose from {', '.join(SWEEP_PARAMETERS)}")
    problems = [p.strip() for p in s["problems"].split(",") if p.strip()]
    for p in problems:
        if p not in ("b1", "b2", "p1", "p2", "asymptote"):
            raise ConfigError(f"unknown problem {p!r}")
    cfg = optimizer_config(s)
    grid = _ints(s["grid"]) if parameter == "n" else _floats(s["grid"])
    rows, ok = [], True
    for value in grid:
        params = channel_params(s, **{parameter: value})
        for p in problems:
            if p == "asymptote":
                rate, conv = solve_asymptote(params.kappa, params.kw[-1],
                                             params.c[-1]).rate, True
            else:
                r = solve(Problem(p), params, cfg)
                rate, conv = r.rate, r.converged
            ok = ok and conv
            rows.append({"parameter": parameter, "value": value, "problem": p,
                         "n": params.n, "rate": rate,
                         "rate_bits": rate / math.log(2.0), "converged": conv})
    _emit(s, ("parameter", "value", "problem", "n", "rate", "rate_bits",
              "converged"), rows)
    return EXIT_OK if ok else EXIT_NONCONVERGED


def cmd_asymptote(s):
    params = channel_params(s)
    kappa, kw, c = params.kappa, params.kw[-1], params.c[-1]
    root = solve_asymptote(kappa, kw, c)
    fp = chi_fixed_point_iteration(kappa, kw, c,
                                   tol=float(s["tol"]) if float(s["tol"]) > 0
                                   else 1e-12)
    row = {"kappa": kappa, "kw": kw, "c": c, "chi": root.chi,
           "rate": root.rate, "rate_bits": root.rate / math.log(2.0),
           "iterations": root.iterations, "residual": root.residual,
           "fixed_point_limit": fp.limit,
           "fixed_point_iterations": fp.iterations,
           "fixed_point_converged": fp.converged}
    _emit(s, tuple(row), [row], row)
    return EXIT_OK if fp.converged else EXIT_NONCONVERGED


COMMANDS = {
    "rate": cmd_rate,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "fragility": cmd_fragility,
    "sweep": cmd_sweep,
    "asymptote": cmd_asymptote,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--n", help="horizon length")
    common.add_argument("--c", help="AR coefficient (one value or n values)")
    common.add_argument("--kw", help="innovation variance (one or n values)")
    common.add_argument("--ktheta", help="message variance")
    common.add_argument("--kv1", help="variance of the first noise sample")
    common.add_argument("--kappa", help="power budget")
    common.add_argument("--constraint", choices=("total", "pointwise"))
    common.add_argument("--state", choices=("none", "known"))
    common.add_argument("--trials", help="Monte Carlo trials")
    common.add_argument("--seed", help="RNG seed")
    common.add_argument("--eps", help="perturbation magnitude")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--restarts", help="multi-start count")
    common.add_argument("--max-iter", dest="max_iter")
    common.add_argument("--tol")
    common.add_argument("--sign-search-limit", dest="sign_search_limit")
    common.add_argument("--continuous", dest="exhaustive",
                        action="store_const", const="false",
                        help="skip the exhaustive sign search for p2")

    parser = argparse.ArgumentParser(
        prog="agnlab",
        description="Rates of linear feedback codes over AR(1) noise channels")
    sub = parser.add_subparsers(dest="command", required=True)
    rate = sub.add_parser("rate", parents=[common])
    rate.add_argument("--problem", choices=("b1", "b2", "p1", "p2"))
    sub.add_parser("fig2", parents=[common])
    fig3 = sub.add_parser("fig3", parents=[common])
    fig3.add_argument("--b2-n-list", dest="b2_n_list")
    fig3.add_argument("--p2-n-list", dest="p2_n_list")
    frag = sub.add_parser("fragility", parents=[common])
    frag.add_argument("--n-list", dest="n_list")
    sweep = sub.add_parser("sweep", parents=[common])
    sweep.add_argument("--parameter")
    sweep.add_argument("--grid", help="comma-separated values")
    sweep.add_argument("--problems", help="comma-separated, e.g. b2,p2,asymptote")
    sub.add_parser("asymptote", parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = resolve(args)
        return COMMANDS[args.command](settings)
    except (ValidationError, ConfigError, SigmaUnderflowError, ValueError,
            OSError) as exc:
        print(f"agnlab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
