"""Linear feedback coding over AR(1) Gaussian noise channels."""

from .model import (ChannelParams, ConstraintKind, GainSequence, Problem,
                    RateResult, RecursionTrace, SimOutcome, StateKind,
                    ValidationError, fig_defaults, validate)

__all__ = [
    "ChannelParams", "ConstraintKind", "GainSequence", "Problem",
    "RateResult", "RecursionTrace", "SimOutcome", "StateKind",
    "ValidationError", "fig_defaults", "validate",
]
