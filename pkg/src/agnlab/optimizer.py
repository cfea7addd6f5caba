"""Rate problems over the encoder gains.

Pointwise power (every transmission uses exactly ``kappa``):

* B2 - the sign rule sgn(g_t) = -sgn(c g_{t-1}) fixes everything, so the
  gains follow from a scalar recursion for chi_t = |g_t / g_{t-1}|.
* P2 - no sign rule. Once |g_t| is pinned by g_t^2 sigma_{t-1} = kappa the
  only freedom left is the sign pattern, which is searched exhaustively and
  cross-checked with a penalised continuous search.

Total power (the average over the horizon is ``kappa``):

* P1 - free real gains, optimised with multi-start Nelder-Mead after
  projecting each candidate onto the power budget with a common multiplier.
* B1 - same engine, magnitudes only, signs fixed by the sign rule.

All solvers work with time-invariant noise (constant c and kw from t = 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize

from .model import (ChannelParams, GainSequence, Problem, RateResult,
                    ValidationError, require_time_invariant, validate)
from .recursions import mutual_information, sigma_trace


class SearchLimitError(ValidationError):
    """Exhaustive sign search requested beyond the configured horizon."""


class SigmaUnderflowError(ArithmeticError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    tol: float = 1e-12
    max_iter: int = 20_000
    sign_search_limit: int = 20
    restarts: int = 8
    seed: int = 0
    exhaustive: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        for name in ("max_iter", "sign_search_limit", "restarts"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")


def sign_rule_sign(c_t: float, g_prev: float) -> float:
    """-sgn(c_t g_prev); +1 when the product vanishes and the rule is vacuous."""
    p = c_t * g_prev
    if p == 0:
        return 1.0
    return -math.copysign(1.0, p)


def _stationary(params):
    validate(params)
    require_time_invariant(params)
    if params.n > 1:
        return params.c[1], params.kw[1]
    return params.c[0], params.kw[0]


def _result(params, gains, problem, **extra):
    mi = mutual_information(params, gains)
    return replace(mi, problem=problem, **extra)


# -- pointwise power --------------------------------------------------------

def b2_chi(params: ChannelParams) -> tuple:
    """chi_2..chi_n of the sign-rule scheme under pointwise power."""
    c, kw = _stationary(params)
    kappa = params.kappa
    if params.n == 1:
        return ()
    chi = [math.sqrt(1.0 + kappa / params.seed_variance)]
    a = kappa / kw
    for _ in range(2, params.n):
        chi.append(math.sqrt(1.0 + (1.0 + abs(c) / chi[-1]) ** 2 * a))
    return tuple(chi)


def recover_gains_from_chi(chi, params: ChannelParams) -> GainSequence:
    """Rebuild g_1..g_n from the chi sequence under pointwise power.

    g_1 = sqrt(kappa / ktheta), g_t = +-sqrt(kappa / sigma_{t-1}) with sigma
    from the closed form in which (g_j - c g_{j-1})^2 is written as
    g_j^2 (1 + |c|/chi_j)^2, and signs assigned by the sign rule.
    """
    _stationary(params)
    chi = tuple(float(x) for x in chi)
    if len(chi) != params.n - 1:
        raise ValidationError(f"need {params.n - 1} chi values, got {len(chi)}")
    kt, s, kappa = params.ktheta, params.seed_variance, params.kappa
    w = params.kw[1] if params.n > 1 else params.kw[0]
    num = w * kt * s

    g = [math.sqrt(kappa / kt)]
    denom = g[0] * g[0] * w * kt + w * s
    for t in range(1, params.n):
        sigma_prev = num / denom
        if not (sigma_prev > 0 and math.isfinite(denom)):
            raise SigmaUnderflowError(
                f"sigma_{t} underflowed to zero; g_{t + 1} is unrepresentable")
        gt = sign_rule_sign(params.c[t], g[-1]) * math.sqrt(kappa / sigma_prev)
        if not math.isfinite(gt):
            raise SigmaUnderflowError(f"g_{t + 1} overflowed")
        g.append(gt)
        denom += gt * gt * (1.0 + abs(params.c[t]) / chi[t - 1]) ** 2 * kt * s
    return GainSequence(tuple(g))


def solve_b2(params: ChannelParams) -> RateResult:
    """Pointwise power with the sign rule; no optimisation involved."""
    c, kw = _stationary(params)
    chi = b2_chi(params)
    gains = recover_gains_from_chi(chi, params)
    a = params.kappa / kw
    terms = [0.5 * math.log1p(params.kappa / params.seed_variance)]
    terms += [0.5 * math.log1p((1.0 + abs(c) / x) ** 2 * a) for x in chi]
    total = math.fsum(terms)
    return RateResult(rate=total / params.n, total_mi=total,
                      trace=sigma_trace(params, gains), gains=gains,
                      problem=Problem.B2)


def pointwise_gains(params: ChannelParams, pattern) -> GainSequence:
    """Gains meeting g_1^2 ktheta = kappa and g_t^2 sigma_{t-1} = kappa.

    ``pattern`` holds the signs of g_2..g_n; g_1 is taken positive.
    """
    validate(params)
    if len(pattern) != params.n - 1:
        raise ValidationError("pattern must have n - 1 entries")
    kt, s, kappa = params.ktheta, params.seed_variance, params.kappa
    g = [math.sqrt(kappa / kt)]
    sigma = kt * s / (kappa + s)
    for t in range(1, params.n):
        gt = math.copysign(math.sqrt(kappa / sigma), pattern[t - 1])
        d = gt - params.c[t] * g[-1]
        sigma = params.kw[t] * sigma / (d * d * sigma + params.kw[t])
        g.append(gt)
    return GainSequence(tuple(g))


def _sign_patterns(m):
    idx = np.arange(2 ** m, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(m, dtype=np.int64)[None, :]) & 1
    return 1.0 - 2.0 * bits


def _exhaustive_p2(params):
    c, kw = _stationary(params)
    n, kappa, kt, s = params.n, params.kappa, params.ktheta, params.seed_variance
    patterns = _sign_patterns(n - 1)
    total = np.full(len(patterns), 0.5 * math.log1p(kappa / s))
    g_prev = np.full(len(patterns), math.sqrt(kappa / kt))
    sigma = np.full(len(patterns), kt * s / (kappa + s))
    for t in range(1, n):
        gt = patterns[:, t - 1] * np.sqrt(kappa / sigma)
        q = (gt - c * g_prev) ** 2 * sigma
        total += 0.5 * np.log1p(q / kw)
        sigma = kw * sigma / (q + kw)
        g_prev = gt
    best = int(np.argmax(total))
    return tuple(int(v) for v in patterns[best])


def _fast_terms(g, c, kw, kt, s):
    """Total MI and per-step powers for time-invariant noise (plain floats)."""
    q1 = g[0] * g[0] * kt
    sigma = kt * s / (q1 + s)
    total = 0.5 * math.log1p(q1 / s)
    powers = [q1]
    for t in range(1, len(g)):
        powers.append(g[t] * g[t] * sigma)
        d = g[t] - c * g[t - 1]
        q = d * d * sigma
        total += 0.5 * math.log1p(q / kw)
        sigma = kw * sigma / (q + kw)
    return total, powers


def _nelder_mead(fun, x0, cfg, args=()):
    return minimize(fun, np.asarray(x0, dtype=float), args=args,
                    method="Nelder-Mead",
                    options=dict(maxiter=cfg.max_iter, maxfev=cfg.max_iter,
                                 xatol=1e-9, fatol=cfg.tol,
                                 adaptive=len(x0) > 3))


def _continuous_p2(params, cfg):
    """Penalised multi-start search; the result is snapped to a feasible point."""
    c, kw = _stationary(params)
    n, kappa, kt, s = params.n, params.kappa, params.ktheta, params.seed_variance

    def objective(x, mu):
        total, powers = _fast_terms(x, c, kw, kt, s)
        pen = math.fsum((p / kappa - 1.0) ** 2 for p in powers)
        return -total / n + mu * pen

    rng = np.random.default_rng(cfg.seed)
    rule = []
    g_prev = 1.0
    for t in range(1, n):
        g_prev = sign_rule_sign(params.c[t], g_prev)
        rule.append(g_prev)
    starts = [rule] + [list(rng.choice([-1.0, 1.0], size=n - 1))
                       for _ in range(cfg.restarts - 1)]

    best = None
    for pattern in starts:
        x = np.array(pointwise_gains(params, pattern).g)
        x *= np.exp(rng.normal(0.0, 0.05, size=n))
        ok = True
        for mu in (1e1, 1e3, 1e5):
            res = _nelder_mead(objective, x, cfg, args=(mu,))
            x, ok = res.x, ok and bool(res.success)
        signs = np.where(x >= 0, 1.0, -1.0)
        snapped = tuple(int(v) for v in signs[1:] * signs[0])
        rate = mutual_information(params, pointwise_gains(params, snapped)).rate
        if best is None or rate > best[0]:
            best = (rate, snapped, ok)
    return best


def solve_p2(params: ChannelParams, cfg: OptimizerConfig = OptimizerConfig()
             ) -> RateResult:
    """Pointwise power without the sign rule.

    Runs the exhaustive sign search (when ``cfg.exhaustive``) and the
    penalised continuous search, and returns whichever rate is higher; ties
    go to the exhaustive branch. ``branch`` names the winner.
    """
    _stationary(params)
    n = params.n
    if n == 1 or params.kappa == 0:
        gains = pointwise_gains(params, (1,) * (n - 1))
        return _result(params, gains, Problem.P2, branch="exhaustive",
                       sign_pattern=(1,) * (n - 1))
    if cfg.exhaustive and n > cfg.sign_search_limit:
        raise SearchLimitError(
            f"exhaustive sign search is limited to n <= {cfg.sign_search_limit} "
            f"(2^(n-1) patterns); use the continuous branch instead "
            f"(exhaustive=False, CLI flag --continuous)")

    candidates = []
    if cfg.exhaustive:
        pattern = _exhaustive_p2(params)
        res = _result(params, pointwise_gains(params, pattern), Problem.P2,
                      branch="exhaustive", sign_pattern=pattern)
        candidates.append(res)
    _, pattern, ok = _continuous_p2(params, cfg)
    res = _result(params, pointwise_gains(params, pattern), Problem.P2,
                  branch="continuous", sign_pattern=pattern, converged=ok)
    candidates.append(res)
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.total_mi > best.total_mi:
            best = cand
    return best


# -- total power ------------------------------------------------------------

def project_total_power(params: ChannelParams, g) -> GainSequence:
    """Scale ``g`` by the unique alpha > 0 giving sum_t kappa_t = n kappa.

    With u = alpha^2 each kappa_t is increasing in u, so the total is
    monotone and a bracketed scalar root search suffices.
    """
    c, kw = _stationary(params)
    g = np.asarray(g, dtype=float)
    n, kappa, kt, s = params.n, params.kappa, params.ktheta, params.seed_variance
    if kappa == 0:
        return GainSequence(tuple(0.0 * g))
    if not np.any(g):
        raise ValidationError("cannot project the all-zero gain sequence")
    d = g[1:] - c * g[:-1]
    snr = np.concatenate(([g[0] ** 2 * kw * kt], g[0] ** 2 * kw * kt
                          + np.cumsum(d * d * kt * s)))
    floor = kw * s

    def excess(u):
        later = u * g[1:] ** 2 * kw * kt * s / (u * snr[:-1] + floor)
        return u * g[0] ** 2 * kt + math.fsum(later) - n * kappa

    lo = n * kappa / (kt * float(np.sum(g * g)))
    with np.errstate(over="ignore", divide="ignore"):
        hi = n * kappa / (kt * g[0] ** 2)
    if not math.isfinite(hi):
        hi = 2 * lo
    while excess(hi) < 0:
        hi *= 2
    if excess(lo) >= 0:
        u = lo
    else:
        u = brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                   maxiter=500)
    return GainSequence(tuple(math.sqrt(u) * g))


def _total_power_search(params, cfg, sign_rule):
    c, kw = _stationary(params)
    n = params.n
    if n == 1 or params.kappa == 0:
        return project_total_power(params, (1.0,) + (0.0,) * (n - 1)), True
    base = np.array(solve_b2(params).gains.g)
    base /= base[0]

    signs = [1.0]
    for t in range(1, n):
        signs.append(sign_rule_sign(params.c[t], signs[-1]))
    signs = np.array(signs)

    def gains_of(x):
        if sign_rule:
            return np.concatenate(([1.0], signs[1:] * np.exp(x)))
        return np.concatenate(([1.0], x))

    def objective(x):
        g = project_total_power(params, gains_of(x)).g
        total, _ = _fast_terms(g, c, kw, params.ktheta, params.seed_variance)
        return -total / n

    rng = np.random.default_rng(cfg.seed)
    if sign_rule:
        x0 = np.log(np.abs(base[1:]))
        starts = [x0] + [x0 + rng.normal(0.0, 0.5, size=n - 1)
                         for _ in range(cfg.restarts - 1)]
    else:
        x0 = base[1:]
        starts = [x0] + [x0 * np.exp(rng.normal(0.0, 0.5, size=n - 1))
                         * rng.choice([-1.0, 1.0], size=n - 1)
                         for _ in range(cfg.restarts - 1)]

    best = None
    for x in starts:
        res = _nelder_mead(objective, x, cfg)
        if best is None or res.fun < best.fun:
            best = res
    # one restart from the incumbent guards against a collapsed simplex
    polished = _nelder_mead(objective, best.x, cfg)
    if polished.fun <= best.fun:
        best = polished
    return project_total_power(params, gains_of(best.x)), bool(best.success)


def solve_p1(params: ChannelParams, cfg: OptimizerConfig = OptimizerConfig()
             ) -> RateResult:
    """Total average power, unrestricted real gains."""
    gains, ok = _total_power_search(params, cfg, sign_rule=False)
    return _result(params, gains, Problem.P1, converged=ok)


def solve_b1(params: ChannelParams, cfg: OptimizerConfig = OptimizerConfig()
             ) -> RateResult:
    """Total average power with signs fixed by the sign rule."""
    gains, ok = _total_power_search(params, cfg, sign_rule=True)
    return _result(params, gains, Problem.B1, converged=ok)


SOLVERS = {
    Problem.B1: solve_b1,
    Problem.B2: lambda params, cfg=None: solve_b2(params),
    Problem.P1: solve_p1,
    Problem.P2: solve_p2,
}
