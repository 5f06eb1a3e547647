"""Single-sample t-test with a self-contained Student-t CDF.

The CDF goes through the regularized incomplete beta function, evaluated
with the continued-fraction expansion (modified Lentz), which converges to
well below 1e-10 over the arguments this package uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import PreconditionError

_MAX_ITER = 300
_TINY = 1e-300
_CF_EPS = 1e-15


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise PreconditionError("beta parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise PreconditionError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the expansion on whichever side converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with `df` degrees of freedom."""
    if df <= 0:
        raise PreconditionError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int


def single_sample_ttest(samples, mu0: float) -> TTestResult:
    """Two-sided one-sample t-test of mean(samples) against mu0.

    Requires n >= 2 and a strictly positive sample standard deviation
    (n-1 denominator).
    """
    xs = [float(x) for x in samples]
    n = len(xs)
    if n < 2:
        raise PreconditionError("t-test needs at least two samples")
    mean = sum(xs) / n
    ss = sum((x - mean) ** 2 for x in xs)
    if ss == 0.0:
        raise PreconditionError("t-test is undefined for zero-variance samples")
    sd = math.sqrt(ss / (n - 1))
    t = (mean - mu0) * math.sqrt(n) / sd
    p = 2.0 * (1.0 - student_t_cdf(abs(t), n - 1))
    return TTestResult(t=t, p=min(p, 1.0), df=n - 1)
