"""Monte Carlo runs of the linear feedback scheme on sampled noise paths.

Random numbers: trial ``i`` of a run seeded with ``seed`` draws from its own
PCG64 stream, keyed by ``SeedSequence(seed, spawn_key=(i,))``. Each trial
consumes exactly 2n + 1 standard normals (numpy's ziggurat sampler) in the
order [theta, noise_1..noise_n, xi_1..xi_n], so a trial's sample path does
not depend on how many trials run or in which order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .model import (ChannelParams, GainSequence, SimOutcome, StateKind,
                    ValidationError, validate)
from .optimizer import solve_b2
from .recursions import estimator_gains, sigma_trace


class PerturbationMode(enum.Enum):
    NONE = "none"
    CONSTANT = "constant"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PerturbationSpec:
    """Perturbation of the error signal before it is scaled by g_t.

    CONSTANT adds ``epsilon * xi_t`` with xi_t standard normal. CUSTOM adds
    the deterministic offsets in ``values`` (one per step), which makes
    |g_t| * eps_t readable directly off the transmitted signal.
    """

    mode: PerturbationMode = PerturbationMode.NONE
    epsilon: float = 0.0
    values: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValidationError("epsilon must be >= 0")
        if any(not (math.isfinite(v) and v >= 0) for v in self.values):
            raise ValidationError("perturbation values must be >= 0")

    @classmethod
    def constant(cls, epsilon: float) -> "PerturbationSpec":
        if epsilon == 0:
            return cls()
        return cls(PerturbationMode.CONSTANT, epsilon=epsilon)

    def magnitudes(self, n: int) -> np.ndarray:
        if self.mode is PerturbationMode.NONE:
            return np.zeros(n)
        if self.mode is PerturbationMode.CONSTANT:
            return np.full(n, self.epsilon)
        if len(self.values) != n:
            raise ValidationError(f"custom perturbation needs {n} values")
        return np.array(self.values)


@dataclass(frozen=True)
class RngSpec:
    seed: int = 0

    def stream(self, trial: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(trial,))
        return np.random.Generator(np.random.PCG64(seq))

    def normals(self, trials: int, width: int, start: int = 0) -> np.ndarray:
        out = np.empty((trials, width))
        for i in range(trials):
            out[i] = self.stream(start + i).standard_normal(width)
        return out


@dataclass(frozen=True)
class FragilityRow:
    n: int
    g_n_abs: float
    amplification: float
    analytic_sigma_n: float
    empirical_sigma_n: float
    excess_mse: float
    excess_stderr: float


def _stderr(samples):
    return float(np.std(samples, ddof=1) / math.sqrt(len(samples))) \
        if len(samples) > 1 else math.inf


def simulate(params: ChannelParams, gains: GainSequence, trials: int,
             rng: RngSpec = RngSpec(),
             perturb: PerturbationSpec = PerturbationSpec(),
             v0: float = 0.0) -> SimOutcome:
    """Run the encoder/channel/decoder loop ``trials`` times.

    The decoder always uses the unperturbed design, so with a perturbation
    the decoder is mismatched to what was actually transmitted.
    """
    validate(params)
    gains.check_against(params)
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    n = params.n
    g = np.array(gains.g)
    c = np.array(params.c)
    kw = np.array(params.kw)
    k = estimator_gains(params, gains).k
    eps = perturb.magnitudes(n)
    random_sign = perturb.mode is PerturbationMode.CONSTANT
    known = params.state_kind is StateKind.KNOWN_INITIAL_STATE

    z = rng.normals(trials, 2 * n + 1)
    theta = math.sqrt(params.ktheta) * z[:, 0]
    noise = z[:, 1:n + 1]
    xi = z[:, n + 1:]

    est = np.zeros(trials)
    est_before = np.zeros(trials)
    powers = np.empty((trials, n))
    innovations = np.empty((trials, n))
    v = y = None
    for t in range(n):
        offset = eps[t] * xi[:, t] if random_sign else eps[t]
        x = g[t] * (theta - est + offset)
        if t == 0:
            if known:
                v = c[0] * v0 + math.sqrt(kw[0]) * noise[:, 0]
                pred = c[0] * v0
            else:
                v = math.sqrt(params.kv1) * noise[:, 0]
                pred = 0.0
        else:
            v = c[t] * v + math.sqrt(kw[t]) * noise[:, t]
            pred = c[t] * (y - g[t - 1] * (est - est_before))
        y = x + v
        innov = y - pred
        est_before, est = est, est + k[t] * innov
        powers[:, t] = x * x
        innovations[:, t] = innov

    sq_err = (theta - est) ** 2
    if n > 1 and trials > 1:
        # a constant column (e.g. zero gains and noise) has no correlation
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = np.corrcoef(innovations, rowvar=False)
    else:
        corr = np.full((n, n), math.nan)
        np.fill_diagonal(corr, 1.0)
    corr_t = tuple(tuple(float(v) for v in row) for row in corr)
    return SimOutcome(
        trials=trials,
        seed=rng.seed,
        empirical_sigma_n=float(sq_err.mean()),
        sigma_n_stderr=_stderr(sq_err),
        empirical_power=tuple(float(v) for v in powers.mean(axis=0)),
        power_stderr=tuple(_stderr(powers[:, t]) for t in range(n)),
        amplification=tuple(float(v) for v in np.abs(g) * eps),
        innovation_corr=corr_t,
    )


def fragility_report(params: ChannelParams, eps: float, n_list,
                     rng: RngSpec = RngSpec(), trials: int = 10_000
                     ) -> list:
    """Amplification |g_n| eps and Monte Carlo excess MSE over horizons.

    For each n the pointwise sign-rule gains are computed, a run perturbed
    by ``eps`` is simulated, and its empirical sigma_n is compared with the
    unperturbed analytic value. Rows come back sorted by n.
    """
    if not (math.isfinite(eps) and eps >= 0):
        raise ValidationError("eps must be >= 0")
    perturb = PerturbationSpec.constant(eps)
    rows = []
    for n in sorted(set(int(v) for v in n_list)):
        p = params.with_horizon(n)
        gains = solve_b2(p).gains
        analytic = sigma_trace(p, gains).sigma[-1]
        out = simulate(p, gains, trials, rng=rng, perturb=perturb)
        g_n = abs(gains.g[-1])
        rows.append(FragilityRow(
            n=n, g_n_abs=g_n, amplification=g_n * eps,
            analytic_sigma_n=analytic,
            empirical_sigma_n=out.empirical_sigma_n,
            excess_mse=out.empirical_sigma_n - analytic,
            excess_stderr=out.sigma_n_stderr))
    return rows


def perturbed(params: ChannelParams, **changes) -> ChannelParams:
    return validate(replace(params, **changes))
