import logging
import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agnlab.asymptotics import (Verdict, chi_fixed_point_iteration, quartic,
                                ratio_test_verdict, solve_asymptote)
from agnlab.model import GainSequence, ValidationError, fig_defaults
from agnlab.optimizer import solve_b2

# Default channel (kappa = kw = 1, c = 0.5); root of the quartic obtained
# from the mpmath polynomial solver below and frozen here.
DEFAULT_CHI = 1.6434789011345703
DEFAULT_RATE = 0.49681527627555233


def grid_root(kappa, kw, c, lo=1.0, hi=3.0, step=1e-6):
    """Dense scan for the first sign change, then plain bisection."""
    x = np.arange(lo, hi + step, step)
    a = kappa / kw
    f = x ** 4 - x ** 2 - a * (x + abs(c)) ** 2
    i = int(np.argmax(f > 0))
    left, right = float(x[i - 1]), float(x[i])
    fq = lambda v: v ** 4 - v ** 2 - a * (v + abs(c)) ** 2
    while right - left > 1e-12:
        mid = 0.5 * (left + right)
        if fq(mid) > 0:
            right = mid
        else:
            left = mid
    return 0.5 * (left + right)


def poly_root(kappa, kw, c):
    """Largest real root of the expanded quartic, 40 digits."""
    a = mp.mpf(kappa) / mp.mpf(kw)
    c = abs(mp.mpf(c))
    roots = mp.polyroots([1, 0, -(1 + a), -2 * a * c, -a * c * c],
                         maxsteps=200, extraprec=200)
    real = [mp.re(r) for r in roots if abs(mp.im(r)) < mp.mpf(10) ** -25]
    return max(real)


def test_frozen_default_root():
    assert float(poly_root(1, 1, 0.5)) == pytest.approx(DEFAULT_CHI, rel=1e-15)
    r = solve_asymptote(1.0, 1.0, 0.5)
    assert r.chi == pytest.approx(DEFAULT_CHI, rel=1e-15)
    assert r.rate == pytest.approx(DEFAULT_RATE, rel=1e-14)
    assert r.residual < 1e-14


def test_default_root_matches_grid_scan():
    assert solve_asymptote(1.0, 1.0, 0.5).chi == \
        pytest.approx(grid_root(1.0, 1.0, 0.5), abs=1e-8)


@pytest.mark.parametrize("kappa,kw,c", [
    (0.5, 1.0, 0.0), (1.0, 1.0, 0.25), (1.0, 2.0, 0.9), (2.0, 1.0, -0.5),
    (0.1, 1.0, 1.0), (3.0, 4.0, -0.75)])
def test_grid_cross_check(kappa, kw, c):
    assert solve_asymptote(kappa, kw, c).chi == \
        pytest.approx(grid_root(kappa, kw, c), abs=1e-8)


@pytest.mark.parametrize("kappa", [0.1, 1.0, 10.0, 1e3])
def test_memoryless_reduces_to_awgn_capacity(kappa):
    r = solve_asymptote(kappa, 1.0, 0.0)
    assert r.rate == pytest.approx(0.5 * math.log1p(kappa), rel=1e-13)


def test_zero_power_gives_zero_rate():
    r = solve_asymptote(0.0, 1.0, 0.7)
    assert r.chi == 1.0
    assert r.rate == 0.0


def test_rate_depends_on_c_through_its_magnitude():
    assert solve_asymptote(1.0, 1.0, -0.5).chi == \
        solve_asymptote(1.0, 1.0, 0.5).chi


def test_large_c_warns_but_solves():
    with pytest.warns(RuntimeWarning):
        r = solve_asymptote(1.0, 1.0, 1.5)
    assert abs(quartic(r.chi, 1.0, 1.0, 1.5)) < 1e-12


@pytest.mark.parametrize("args", [(-1.0, 1.0, 0.5), (1.0, 0.0, 0.5),
                                  (1.0, 1.0, math.nan), (math.inf, 1.0, 0.0)])
def test_invalid_inputs(args):
    with pytest.raises(ValidationError):
        solve_asymptote(*args)


def test_bisection_tolerance_is_respected():
    coarse = solve_asymptote(1.0, 1.0, 0.5, tol=1e-3)
    assert abs(coarse.chi - DEFAULT_CHI) < 1e-3
    assert coarse.iterations < solve_asymptote(1.0, 1.0, 0.5).iterations


def test_multiple_sign_changes_are_logged(monkeypatch, caplog):
    import agnlab.asymptotics as asy

    # a stand-in with three roots inside the first bracket: the smallest wins
    monkeypatch.setattr(asy, "quartic",
                        lambda x, k, w, c: (x - 1.2) * (x - 1.4) * (x - 1.6))
    with caplog.at_level(logging.WARNING, logger="agnlab.asymptotics"):
        r = asy.solve_asymptote(1.0, 1.0, 0.0)
    assert r.chi == pytest.approx(1.2, abs=1e-12)
    assert "sign changes" in caplog.text


def test_fixed_point_first_terms():
    fp = chi_fixed_point_iteration(1.0, 1.0, 0.5)
    assert fp.chis[0] == 2.0
    assert fp.chis[1] == pytest.approx(math.sqrt(2.5625), rel=1e-15)
    assert fp.converged and fp.matches_root
    assert fp.limit == pytest.approx(DEFAULT_CHI, abs=1e-11)


def test_fixed_point_seed_does_not_change_limit():
    a = chi_fixed_point_iteration(1.0, 1.0, 0.5)
    b = chi_fixed_point_iteration(1.0, 1.0, 0.5, chi2=math.sqrt(2.0))
    assert b.chis[0] == math.sqrt(2.0)
    assert a.limit == pytest.approx(b.limit, abs=1e-11)


def test_fixed_point_budget_exhausted():
    fp = chi_fixed_point_iteration(1.0, 1.0, 0.5, n_max=4)
    assert not fp.converged
    assert len(fp.chis) == 3


def test_b2_gain_ratios_approach_root():
    g = solve_b2(fig_defaults(60)).gains.g
    assert abs(g[-1] / g[-2]) == pytest.approx(DEFAULT_CHI, abs=1e-10)


def test_ratio_test_on_b2_gains_diverges():
    res = ratio_test_verdict(solve_b2(fig_defaults(20)).gains)
    assert res.verdict is Verdict.DIVERGES_TO_INFINITY
    assert res.limit > 1.6


def test_ratio_test_cases():
    shrink = GainSequence(tuple(0.5 ** t for t in range(12)))
    flat = GainSequence((1.0, -1.0) * 6)
    assert ratio_test_verdict(shrink).verdict is Verdict.CONVERGES_TO_ZERO
    assert ratio_test_verdict(flat).verdict is Verdict.INCONCLUSIVE
    assert ratio_test_verdict(shrink, window=3).window == 3
    with pytest.raises(ValidationError):
        ratio_test_verdict(GainSequence((1.0, 0.0, 0.0, 2.0)))
    with pytest.raises(ValidationError):
        ratio_test_verdict(GainSequence((1.0, 2.0, 0.0, 2.0, 3.0)))


# -- property tests ----------------------------------------------------------

pos = st.floats(1e-3, 50)
cs = st.floats(-1, 1)


@given(kappa=pos, kw=pos, c=cs)
def test_root_solves_quartic(kappa, kw, c):
    r = solve_asymptote(kappa, kw, c)
    scale = r.chi ** 4 + (kappa / kw) * (r.chi + abs(c)) ** 2
    assert r.chi >= 1.0
    assert abs(quartic(r.chi, kappa, kw, c)) <= 1e-13 * scale
    # chi itself is only known to an ulp of 1, which bounds the rate error
    assert r.rate >= 0.5 * math.log1p(kappa / kw) - 4e-16


@settings(max_examples=40)
@given(kappa=pos, kw=pos, c=cs)
def test_root_matches_polynomial_solver(kappa, kw, c):
    assert solve_asymptote(kappa, kw, c).chi == \
        pytest.approx(float(poly_root(kappa, kw, c)), rel=1e-13)


@given(k1=pos, k2=pos, kw=pos, c=cs)
def test_rate_monotone_in_kappa(k1, k2, kw, c):
    lo, hi = sorted((k1, k2))
    assert solve_asymptote(lo, kw, c).rate <= solve_asymptote(hi, kw, c).rate


@given(kappa=pos, kw=pos, c1=cs, c2=cs)
def test_rate_monotone_in_abs_c(kappa, kw, c1, c2):
    lo, hi = sorted((abs(c1), abs(c2)))
    assert solve_asymptote(kappa, kw, lo).rate <= \
        solve_asymptote(kappa, kw, hi).rate


@settings(max_examples=40)
@given(kappa=st.floats(1e-2, 20), kw=st.floats(1e-2, 20), c=cs)
def test_fixed_point_converges_to_root(kappa, kw, c):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fp = chi_fixed_point_iteration(kappa, kw, c)
    assert fp.converged
    assert fp.limit == pytest.approx(fp.root, rel=1e-10)
