"""Beta distribution and Kolmogorov-Smirnov helpers, implemented in-repo.

The regularized incomplete beta I_x(a,b) uses the standard continued
fraction (modified Lentz iteration) with the symmetry split at
x < (a+1)/(a+b+2); quantiles invert it by bisection.  The KS helpers give
the one-sample statistic and the asymptotic Kolmogorov tail probability.
No scipy: these few functions are all the harness needs, and keeping them
here makes the coverage-law checks self-contained.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError

_MAX_ITER = 500
_EPS = 1e-15
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (Lentz's method)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
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
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ConfigError(f"beta shape parameters must be positive, got ({a}, {b})")
    if not 0.0 <= x <= 1.0:
        raise ConfigError(f"x must lie in [0,1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def beta_cdf(a: float, b: float, x: float) -> float:
    return regularized_incomplete_beta(a, b, min(max(x, 0.0), 1.0))


def beta_mean(a: float, b: float) -> float:
    return a / (a + b)


def beta_quantile(a: float, b: float, p: float, tol: float = 1e-10) -> float:
    """Inverse of beta_cdf in x, bisected to absolute tolerance tol."""
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"p must lie in [0,1], got {p}")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if beta_cdf(a, b, mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_central_interval(a: float, b: float, mass: float) -> tuple[float, float]:
    """Equal-tail interval holding the given central probability mass."""
    if not 0.0 < mass < 1.0:
        raise ConfigError(f"mass must lie in (0,1), got {mass}")
    tail = 0.5 * (1.0 - mass)
    return beta_quantile(a, b, tail), beta_quantile(a, b, 1.0 - tail)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------


def ks_statistic(samples: np.ndarray, cdf) -> float:
    """One-sample KS distance sup|F_n - F| for a callable model CDF."""
    s = np.sort(np.asarray(samples, dtype=np.float64))
    n = s.size
    if n == 0:
        raise ConfigError("KS statistic of an empty sample")
    f = np.array([cdf(v) for v in s])
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic tail Q_KS(lam) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lam^2)."""
    if lam <= 0.0:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-16:
            break
    return min(max(total, 0.0), 1.0)


def ks_pvalue(statistic: float, n: int) -> float:
    """Asymptotic p-value with the Stephens small-sample correction."""
    if n < 1:
        raise ConfigError("KS p-value needs n >= 1")
    rootn = math.sqrt(n)
    return kolmogorov_sf((rootn + 0.12 + 0.11 / rootn) * statistic)
