"""Value types shared across the package.

Everything here is an immutable dataclass. Sequences are stored as tuples so
instances can be hashed and shared between workers without copying.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence


class ValidationError(ValueError):
    """Raised when parameters violate a documented invariant."""


class ConstraintKind(enum.Enum):
    TOTAL_AVERAGE = "total"
    POINTWISE = "pointwise"


class StateKind(enum.Enum):
    NO_INITIAL_STATE = "none"
    KNOWN_INITIAL_STATE = "known"


class Problem(enum.Enum):
    B1 = "b1"
    B2 = "b2"
    B_ASYMPTOTIC = "b"
    P1 = "p1"
    P2 = "p2"


def _as_float_tuple(values, name):
    try:
        out = tuple(float(v) for v in values)
    except TypeError:
        raise ValidationError(f"{name} must be a sequence of numbers") from None
    return out


@dataclass(frozen=True)
class ChannelParams:
    """AR(1) noise channel plus message variance and power budget.

    ``c[t]`` and ``kw[t]`` are the coefficient and innovation variance used at
    transmission ``t + 1``. ``kv1`` is the variance of the first noise sample
    when no initial state is available; with a known initial state the first
    step is seeded with ``kw[0]`` instead and ``kv1`` is ignored.
    """

    n: int
    c: tuple
    kw: tuple
    kv1: float = 1.0
    ktheta: float = 1.0
    kappa: float = 1.0
    constraint_kind: ConstraintKind = ConstraintKind.POINTWISE
    state_kind: StateKind = StateKind.KNOWN_INITIAL_STATE

    def __post_init__(self):
        object.__setattr__(self, "c", _as_float_tuple(self.c, "c"))
        object.__setattr__(self, "kw", _as_float_tuple(self.kw, "kw"))

    @classmethod
    def constant(cls, n, c=0.5, kw=1.0, kv1=1.0, ktheta=1.0, kappa=1.0,
                 constraint_kind=ConstraintKind.POINTWISE,
                 state_kind=StateKind.KNOWN_INITIAL_STATE) -> "ChannelParams":
        """Time-invariant noise: the same ``c`` and ``kw`` at every step."""
        return validate(cls(n=int(n), c=(c,) * int(n), kw=(kw,) * int(n),
                            kv1=kv1, ktheta=ktheta, kappa=kappa,
                            constraint_kind=constraint_kind,
                            state_kind=state_kind))

    @property
    def seed_variance(self) -> float:
        """Variance of the noise entering the first observation."""
        if self.state_kind is StateKind.KNOWN_INITIAL_STATE:
            return self.kw[0]
        return self.kv1

    @property
    def is_time_invariant(self) -> bool:
        """True when ``c`` and ``kw`` are constant from the second step on."""
        return len(set(self.c[1:])) <= 1 and len(set(self.kw[1:])) <= 1

    def with_horizon(self, n: int) -> "ChannelParams":
        """Same time-invariant channel over a different horizon."""
        require_time_invariant(self)
        c = self.c[-1] if self.n > 1 else self.c[0]
        kw = self.kw[-1] if self.n > 1 else self.kw[0]
        n = int(n)
        return validate(replace(self, n=n, c=(self.c[0],) + (c,) * (n - 1),
                                kw=(self.kw[0],) + (kw,) * (n - 1)))


def require_time_invariant(params: ChannelParams) -> None:
    if not params.is_time_invariant:
        raise ValidationError(
            "this operation needs constant c and kw for t >= 2")


def validate(params: ChannelParams) -> ChannelParams:
    """Check every invariant of ``params`` and return it unchanged."""
    if not isinstance(params.n, int) or isinstance(params.n, bool) or params.n < 1:
        raise ValidationError(f"n must be a positive integer, got {params.n!r}")
    if len(params.c) != params.n:
        raise ValidationError(f"len(c) = {len(params.c)} but n = {params.n}")
    if len(params.kw) != params.n:
        raise ValidationError(f"len(kw) = {len(params.kw)} but n = {params.n}")
    for name, seq in (("c", params.c), ("kw", params.kw)):
        if not all(math.isfinite(v) for v in seq):
            raise ValidationError(f"{name} must be finite")
    for t, v in enumerate(params.kw, start=1):
        if v <= 0:
            raise ValidationError(f"kw at t={t} must be positive, got {v}")
    for name in ("kv1", "ktheta"):
        v = getattr(params, name)
        if not (math.isfinite(v) and v > 0):
            raise ValidationError(f"{name} must be positive and finite, got {v}")
    if not (math.isfinite(params.kappa) and params.kappa >= 0):
        raise ValidationError(f"kappa must be >= 0, got {params.kappa}")
    if not isinstance(params.constraint_kind, ConstraintKind):
        raise ValidationError("constraint_kind must be a ConstraintKind")
    if not isinstance(params.state_kind, StateKind):
        raise ValidationError("state_kind must be a StateKind")
    return params


@dataclass(frozen=True)
class GainSequence:
    """Encoder gains g_1..g_n applied to the decoder's estimation error."""

    g: tuple

    def __post_init__(self):
        g = _as_float_tuple(self.g, "g")
        if not all(math.isfinite(v) for v in g):
            raise ValidationError("gains must be finite")
        object.__setattr__(self, "g", g)

    def __len__(self):
        return len(self.g)

    def check_against(self, params: ChannelParams) -> "GainSequence":
        if len(self.g) != params.n:
            raise ValidationError(
                f"{len(self.g)} gains supplied for horizon n = {params.n}")
        return self

    def negated(self) -> "GainSequence":
        return GainSequence(tuple(-v for v in self.g))


@dataclass(frozen=True)
class RecursionTrace:
    """Per-step record of the estimation recursion.

    ``sigma`` has n + 1 entries, starting with sigma_0 = ktheta. ``chi`` has
    n - 1 entries (|g_t / g_{t-1}| for t = 2..n, NaN where g_{t-1} = 0).
    ``snr`` is only filled by the closed-form evaluation.
    """

    sigma: tuple
    kappa_t: tuple
    chi: tuple
    mi_increments: tuple
    snr: Optional[tuple] = None


@dataclass(frozen=True)
class RateResult:
    rate: float
    total_mi: float
    trace: RecursionTrace
    gains: GainSequence
    problem: Optional[Problem] = None
    converged: bool = True
    branch: Optional[str] = None
    sign_pattern: Optional[tuple] = None

    @property
    def n(self) -> int:
        return len(self.gains)

    @property
    def rate_bits(self) -> float:
        return self.rate / math.log(2.0)


@dataclass(frozen=True)
class SimOutcome:
    """Monte Carlo statistics for one (params, gains, perturbation) run."""

    trials: int
    seed: int
    empirical_sigma_n: float
    sigma_n_stderr: float
    empirical_power: tuple
    power_stderr: tuple
    amplification: tuple
    innovation_corr: tuple = field(repr=False)

    def max_innovation_crosscorr(self) -> float:
        n = len(self.innovation_corr)
        vals = [abs(self.innovation_corr[i][j])
                for i in range(n) for j in range(n) if i != j]
        if any(math.isnan(v) for v in vals):
            return math.nan
        return max(vals, default=0.0)


def fig_defaults(n: int = 10) -> ChannelParams:
    """Unit variances, c = 0.5, kappa = 1: the reference parameter set."""
    return ChannelParams.constant(n, c=0.5, kw=1.0, kv1=1.0, ktheta=1.0,
                                  kappa=1.0)


def gains_of(values: Sequence[float]) -> GainSequence:
    return GainSequence(tuple(values))
