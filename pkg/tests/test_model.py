import dataclasses

import pytest
from hypothesis import given, strategies as st

from agnlab.model import (ChannelParams, GainSequence, StateKind,
                          ValidationError, fig_defaults, validate)


def test_reference_parameters_accepted():
    p = ChannelParams(n=10, c=[0.5] * 10, kw=[1.0] * 10, kv1=1.0, ktheta=1.0,
                      kappa=1.0)
    assert validate(p) is p
    assert fig_defaults(10) == p


def test_zero_budget_is_legal():
    assert validate(ChannelParams.constant(3, kappa=0.0)).kappa == 0.0


@pytest.mark.parametrize("changes", [
    dict(kw=(0.0, 1.0, 1.0)),
    dict(kw=(1.0, -1.0, 1.0)),
    dict(kv1=0.0),
    dict(ktheta=-1.0),
    dict(kappa=-0.1),
    dict(c=(0.5, 0.5)),
    dict(kw=(1.0,) * 4),
    dict(c=(0.5, float("nan"), 0.5)),
])
def test_invalid_parameters_rejected(changes):
    p = dataclasses.replace(fig_defaults(3), **changes)
    with pytest.raises(ValidationError):
        validate(p)


def test_zero_horizon_rejected():
    with pytest.raises(ValidationError):
        validate(ChannelParams(n=0, c=(), kw=()))


def test_seed_variance_follows_state_kind():
    p = ChannelParams(n=2, c=(0.5, 0.5), kw=(2.0, 1.0), kv1=3.0)
    assert p.seed_variance == 2.0
    q = dataclasses.replace(p, state_kind=StateKind.NO_INITIAL_STATE)
    assert q.seed_variance == 3.0


def test_gain_length_must_match():
    with pytest.raises(ValidationError):
        GainSequence((1.0, 2.0)).check_against(fig_defaults(3))
    with pytest.raises(ValidationError):
        GainSequence((1.0, float("inf")))


def test_with_horizon_keeps_channel():
    p = ChannelParams(n=3, c=(0.1, 0.5, 0.5), kw=(2.0, 1.0, 1.0))
    q = p.with_horizon(5)
    assert q.c == (0.1, 0.5, 0.5, 0.5, 0.5)
    assert q.kw == (2.0, 1.0, 1.0, 1.0, 1.0)


@given(n=st.integers(1, 8),
       c=st.floats(-3, 3),
       kw=st.floats(1e-3, 1e3),
       kappa=st.floats(0, 1e3))
def test_validate_idempotent(n, c, kw, kappa):
    p = ChannelParams.constant(n, c=c, kw=kw, kappa=kappa)
    assert validate(validate(p)) == validate(p)
