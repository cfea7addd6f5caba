"""Closed-form recursions of the linear feedback scheme.

Given encoder gains g_1..g_n the decoder's error variance evolves as

    sigma_1 = ktheta*S / (g_1^2 ktheta + S)
    sigma_t = kw_t*sigma_{t-1} / ((g_t - c_t g_{t-1})^2 sigma_{t-1} + kw_t)

where S is the variance of the first noise sample (``kv1``, or ``kw_1`` when
the initial noise state is known to both ends). All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (ChannelParams, GainSequence, RateResult, RecursionTrace,
                    ValidationError, validate)


class ZeroGainError(ValueError):
    """A gain ratio was requested across a zero gain."""


@dataclass(frozen=True)
class EstimatorGains:
    """Coefficients k_t in  theta_hat_t = theta_hat_{t-1} + k_t * I_t."""

    k: tuple


@dataclass(frozen=True)
class ChiReport:
    """Gain ratios for t = 2..n and the residuals of their power recursion.

    ``residual[i]`` checks the magnitude recursion
    chi_t^2 = {1 + (1 + |c|/chi_{t-1})^2 kappa_{t-1}/kw} kappa_t/kappa_{t-1};
    it is NaN wherever the sign rule does not hold at step t - 1 (the
    magnitude form is only an identity under that rule). ``signed_residual``
    checks the sign-agnostic version with (1 - c/chi_signed) and is defined
    everywhere.
    """

    chi: tuple
    signed: tuple
    residual: tuple
    signed_residual: tuple

    def max_residual(self) -> float:
        vals = [abs(r) for r in self.residual if not math.isnan(r)]
        return max(vals, default=0.0)


def _prepare(params, gains):
    validate(params)
    gains.check_against(params)
    return params.c, params.kw, gains.g


def _ratio(num, den):
    return abs(num / den) if den != 0 else math.nan


def sigma_trace(params: ChannelParams, gains: GainSequence) -> RecursionTrace:
    """Run the error-variance recursion step by step."""
    c, kw, g = _prepare(params, gains)
    kt = params.ktheta
    s = params.seed_variance

    q1 = g[0] * g[0] * kt
    sigma = [kt, kt / (1.0 + q1 / s)]
    kappa_t = [q1]
    increments = [0.5 * math.log1p(q1 / s)]
    for t in range(1, params.n):
        prev = sigma[-1]
        d = g[t] - c[t] * g[t - 1]
        q = d * d * prev
        kappa_t.append(g[t] * g[t] * prev)
        sigma.append(prev / (1.0 + q / kw[t]))
        increments.append(0.5 * math.log1p(q / kw[t]))

    chi = tuple(_ratio(g[t], g[t - 1]) for t in range(1, params.n))
    return RecursionTrace(sigma=tuple(sigma), kappa_t=tuple(kappa_t), chi=chi,
                          mi_increments=tuple(increments))


def sigma_closed_form(params: ChannelParams,
                      gains: GainSequence) -> RecursionTrace:
    """Non-recursive error variance, valid when kw_t is constant for t >= 2.

    With SNR_t = g_1^2 kw ktheta + sum_{j=2..t} (g_j - c_j g_{j-1})^2 ktheta S,
    sigma_t = kw ktheta S / (SNR_t + kw S).
    """
    c, kw, g = _prepare(params, gains)
    if len(set(kw[1:])) > 1:
        raise ValidationError("closed form needs kw_t constant for t >= 2")
    kt = params.ktheta
    s = params.seed_variance
    w = kw[1] if params.n > 1 else kw[0]

    floor = w * s
    snr = [g[0] * g[0] * w * kt]
    for t in range(1, params.n):
        d = g[t] - c[t] * g[t - 1]
        snr.append(snr[-1] + d * d * kt * s)

    sigma = [kt] + [kt / (1.0 + v / floor) for v in snr]
    kappa_t = [g[0] * g[0] * kt] + [g[t] * g[t] * sigma[t]
                                    for t in range(1, params.n)]
    prev = [0.0] + snr[:-1]
    increments = [0.5 * math.log1p((cur - p) / (p + floor))
                  for cur, p in zip(snr, prev)]
    chi = tuple(_ratio(g[t], g[t - 1]) for t in range(1, params.n))
    return RecursionTrace(sigma=tuple(sigma), kappa_t=tuple(kappa_t), chi=chi,
                          mi_increments=tuple(increments), snr=tuple(snr))


def estimator_gains(params: ChannelParams,
                    gains: GainSequence) -> EstimatorGains:
    """Innovation weights of the decoder's conditional-mean recursion."""
    c, kw, g = _prepare(params, gains)
    kt = params.ktheta
    s = params.seed_variance
    k = [g[0] * kt / (g[0] * g[0] * kt + s)]
    prev = kt / (1.0 + g[0] * g[0] * kt / s)
    for t in range(1, params.n):
        d = g[t] - c[t] * g[t - 1]
        denom = d * d * prev + kw[t]
        k.append(d * prev / denom)
        prev = prev / (1.0 + d * d * prev / kw[t])
    return EstimatorGains(tuple(k))


def mutual_information(params: ChannelParams,
                       gains: GainSequence) -> RateResult:
    """I(theta; Y^n) in nats as the sum of per-step innovation terms."""
    trace = sigma_trace(params, gains)
    total = math.fsum(trace.mi_increments)
    return RateResult(rate=total / params.n, total_mi=total, trace=trace,
                      gains=gains)


def signed_chi(gains: GainSequence) -> tuple:
    g = gains.g
    out = []
    for t in range(1, len(g)):
        if g[t - 1] == 0:
            raise ZeroGainError(f"g_{t} = 0, ratio g_{t + 1}/g_{t} undefined")
        out.append(g[t] / g[t - 1])
    return tuple(out)


def follows_sign_rule(c_t: float, g_t: float, g_prev: float) -> bool:
    """sgn(g_t) == -sgn(c_t g_prev); vacuous when c_t == 0."""
    if c_t == 0 or g_prev == 0:
        return True
    return math.copysign(1.0, g_t) == -math.copysign(1.0, c_t * g_prev)


def chi_trace(params: ChannelParams, gains: GainSequence) -> ChiReport:
    """|g_t/g_{t-1}| for t = 2..n together with recursion residuals."""
    c, kw, g = _prepare(params, gains)
    signed = signed_chi(gains)
    chi = tuple(abs(v) for v in signed)
    kap = sigma_trace(params, gains).kappa_t
    s = params.seed_variance

    residual, signed_residual = [], []
    for i, t in enumerate(range(1, params.n)):
        # i indexes chi for step t+1 (1-based), t indexes arrays (0-based)
        if t == 1:
            step = 1.0 + kap[0] / s
            r = chi[i] ** 2 - step * kap[1] / kap[0]
            residual.append(r)
            signed_residual.append(r)
            continue
        ratio_k = kap[t] / kap[t - 1]
        load = kap[t - 1] / kw[t - 1]
        rs = signed[i] ** 2 - (1.0 + (1.0 - c[t - 1] / signed[i - 1]) ** 2
                               * load) * ratio_k
        signed_residual.append(rs)
        if follows_sign_rule(c[t - 1], g[t - 1], g[t - 2]):
            residual.append(chi[i] ** 2 - (1.0 + (1.0 + abs(c[t - 1]) / chi[i - 1])
                                           ** 2 * load) * ratio_k)
        else:
            residual.append(math.nan)
    return ChiReport(chi=chi, signed=signed, residual=tuple(residual),
                     signed_residual=tuple(signed_residual))
