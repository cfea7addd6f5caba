"""Large-horizon behaviour of the pointwise-power scheme.

The per-step gain ratio converges to the root chi >= 1 of

    chi^4 - chi^2 - (kappa/kw) (chi + |c|)^2 = 0

and the achievable rate tends to log(chi) nats per transmission.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

from .model import GainSequence, ValidationError

log = logging.getLogger(__name__)

_MAX_EXPANSIONS = 200
_SCAN_POINTS = 64


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class AsymptoteResult:
    chi: float
    rate: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class FixedPointResult:
    chis: tuple
    limit: float
    converged: bool
    iterations: int
    root: float
    matches_root: bool


class Verdict(enum.Enum):
    DIVERGES_TO_INFINITY = "diverges"
    CONVERGES_TO_ZERO = "converges"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class RatioTestResult:
    verdict: Verdict
    limit: float
    window: int


def quartic(chi: float, kappa: float, kw: float, c: float) -> float:
    a = kappa / kw
    x2 = chi * chi
    return x2 * x2 - x2 - a * (chi + abs(c)) ** 2


def _check_inputs(kappa, kw, c):
    if not (math.isfinite(kappa) and kappa >= 0):
        raise ValidationError(f"kappa must be >= 0, got {kappa}")
    if not (math.isfinite(kw) and kw > 0):
        raise ValidationError(f"kw must be positive, got {kw}")
    if not math.isfinite(c):
        raise ValidationError("c must be finite")
    if abs(c) > 1:
        warnings.warn(f"|c| = {abs(c)} > 1: bound computed formally",
                      RuntimeWarning, stacklevel=3)


def solve_asymptote(kappa: float, kw: float, c: float,
                    tol: float = 0.0) -> AsymptoteResult:
    """Bisection for the quartic root on [1, inf).

    The upper end starts at 2 + sqrt(kappa/kw) + |c| and doubles until the
    quartic changes sign. With ``tol = 0`` bisection runs until the bracket
    can no longer shrink in double precision; a single Newton step is kept
    afterwards only if it lowers the residual.
    """
    _check_inputs(kappa, kw, c)
    f = lambda x: quartic(x, kappa, kw, c)
    lo = 1.0
    if f(lo) == 0.0:
        return AsymptoteResult(chi=1.0, rate=0.0, iterations=0, residual=0.0)

    hi = 2.0 + math.sqrt(kappa / kw) + abs(c)
    for _ in range(_MAX_EXPANSIONS):
        if f(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketError("could not bracket the quartic root")

    lo, hi = _first_sign_change(f, lo, hi)

    iterations = 0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= tol:
            break
        iterations += 1
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    chi = lo if abs(f(lo)) <= abs(f(hi)) else hi

    x2 = chi * chi
    slope = 4 * x2 * chi - 2 * chi - 2 * (kappa / kw) * (chi + abs(c))
    if slope > 0:
        polished = chi - f(chi) / slope
        if polished >= 1.0 and abs(f(polished)) < abs(f(chi)):
            chi = polished
    return AsymptoteResult(chi=chi, rate=math.log(chi), iterations=iterations,
                           residual=abs(f(chi)))


def _first_sign_change(f, lo, hi):
    """Narrow [lo, hi] to the first sign change seen on a coarse scan."""
    step = (hi - lo) / _SCAN_POINTS
    points = [lo + i * step for i in range(_SCAN_POINTS)] + [hi]
    signs = [f(x) > 0 for x in points]
    changes = [i for i in range(_SCAN_POINTS) if signs[i] != signs[i + 1]]
    if len(changes) > 1:
        log.warning("quartic shows %d sign changes on [%g, %g]; "
                    "returning the smallest root", len(changes), lo, hi)
    i = changes[0]
    return points[i], points[i + 1]


def chi_fixed_point_iteration(kappa: float, kw: float, c: float,
                              n_max: int = 10_000, tol: float = 1e-12,
                              chi2: Optional[float] = None) -> FixedPointResult:
    """Iterate chi_t = sqrt(1 + (1 + |c|/chi_{t-1})^2 kappa/kw).

    ``chi2`` seeds the sequence; by default it is 1 + kappa/kw, the seed of
    the classical statement. A scheme that starts with g_1^2 = kappa and
    unit message variance has chi_2 = sqrt(1 + kappa/S) instead; the limit
    does not depend on the seed.
    """
    _check_inputs(kappa, kw, c)
    a = kappa / kw
    x = 1.0 + a if chi2 is None else float(chi2)
    chis = [x]
    converged = False
    for _ in range(max(n_max - 2, 0)):
        nxt = math.sqrt(1.0 + (1.0 + abs(c) / x) ** 2 * a)
        chis.append(nxt)
        done = abs(nxt - x) < tol
        x = nxt
        if done:
            converged = True
            break
    root = solve_asymptote(kappa, kw, c).chi
    return FixedPointResult(chis=tuple(chis), limit=x, converged=converged,
                            iterations=len(chis) - 1, root=root,
                            matches_root=abs(x - root) <= max(tol, 8 * math.ulp(root)))


def ratio_test_verdict(gains: GainSequence, window: int = 10,
                       margin: float = 1e-3) -> RatioTestResult:
    """Estimate lim |g_t/g_{t-1}| from the tail and classify |g_t|."""
    g = gains.g
    nonzero = sum(1 for v in g if v != 0)
    if nonzero < 3:
        raise ValidationError("ratio test needs at least 3 nonzero gains")
    window = max(1, min(window, len(g) - 1))
    tail = g[len(g) - window - 1:]
    ratios = []
    for prev, cur in zip(tail, tail[1:]):
        if prev == 0:
            raise ValidationError("zero gain inside the ratio-test window")
        ratios.append(abs(cur / prev))
    limit = math.fsum(ratios) / len(ratios)
    if limit > 1 + margin:
        verdict = Verdict.DIVERGES_TO_INFINITY
    elif limit < 1 - margin:
        verdict = Verdict.CONVERGES_TO_ZERO
    else:
        verdict = Verdict.INCONCLUSIVE
    return RatioTestResult(verdict=verdict, limit=limit, window=window)
