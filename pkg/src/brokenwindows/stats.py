"""Autocorrelation, Ljung-Box, quantiles, two-sample KS and BH adjustment.

Everything here is a pure function of its arguments.  Tail probabilities
come from in-house special functions (regularized incomplete gamma and the
Kolmogorov distribution) so the module depends on numpy only.
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import UndefinedAutocorrelation

P_FLOOR = 1e-300
_EPS = 1e-16
_MAX_ITER = 10_000


@dataclass(frozen=True)
class MetricSeries:
    repo: str
    path: str
    metric_id: str
    values: np.ndarray


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    rho: np.ndarray
    q_stat: np.ndarray
    p_value: np.ndarray


def acf(series: Sequence[float], max_lag: int) -> np.ndarray:
    """Sample autocorrelation for lags ``1..max_lag``.

    rho_k = sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("autocorrelation needs at least two observations")
    if not 1 <= max_lag < n:
        raise ValueError(f"max_lag must be in [1, {n - 1}], got {max_lag}")
    d = x - x.mean()
    denom = float(np.dot(d, d))
    if denom == 0.0 or np.all(x == x[0]):
        raise UndefinedAutocorrelation("constant series")
    return np.array([np.dot(d[:-k], d[k:]) / denom for k in range(1, max_lag + 1)])


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    log_prefix = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        # series for P(a, x)
        term = total = 1.0 / a
        ap = a
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        return max(0.0, 1.0 - total * math.exp(log_prefix))
    # modified Lentz continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(log_prefix) * h


def chi2_sf(q: float, df: int) -> float:
    """Upper tail of the chi-square distribution with ``df`` degrees of freedom."""
    return gammaincc(df / 2.0, q / 2.0)


def ljung_box(rho: Sequence[float], n: int, h: int) -> Tuple[float, float]:
    """Ljung-Box statistic over lags ``1..h`` and its chi-square p-value."""
    if h < 1:
        raise ValueError("h must be at least 1")
    if n <= h:
        raise ValueError("n must exceed h")
    r = np.asarray(rho, dtype=float)[:h]
    if r.size < h:
        raise ValueError(f"need {h} autocorrelations, got {r.size}")
    k = np.arange(1, h + 1)
    q = float(n * (n + 2) * np.sum(r * r / (n - k)))
    return q, max(chi2_sf(q, h), P_FLOOR)


def autocorrelation_test(series: Sequence[float], max_lag: int) -> AcfResult:
    """ACF plus the Ljung-Box test evaluated at every lag up to ``max_lag``."""
    x = np.asarray(series, dtype=float)
    n = x.size
    rho = acf(x, max_lag)
    k = np.arange(1, max_lag + 1)
    q = n * (n + 2) * np.cumsum(rho * rho / (n - k))
    p = np.array([max(chi2_sf(qi, int(h)), P_FLOOR) for qi, h in zip(q, k)])
    return AcfResult(k, rho, q, p)


def empirical_quantile(values: Sequence[float], q: float) -> float:
    """Quantile by linear interpolation at rank ``1 + (n - 1) q``."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise ValueError("quantile of an empty sample")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must be in [0, 1]")
    h = (x.size - 1) * q
    lo = int(math.floor(h))
    hi = min(lo + 1, x.size - 1)
    return float(x[lo] + (h - lo) * (x[hi] - x[lo]))


def kolmogorov_sf(lam: float) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0.0:
        return 1.0
    if lam < 1.18:
        # theta-function form converges fast for small lam
        c = -(math.pi ** 2) / (8.0 * lam * lam)
        total = 0.0
        for k in range(1, 100):
            term = math.exp(c * (2 * k - 1) ** 2)
            total += term
            if term < 1e-17:
                break
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * total))
    total = 0.0
    sign = 1.0
    for k in range(1, 100):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term < 1e-300:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(x: Sequence[float], y: Sequence[float]) -> float:
    xs = np.sort(np.asarray(x, dtype=float))
    ys = np.sort(np.asarray(y, dtype=float))
    if xs.size == 0 or ys.size == 0:
        raise ValueError("KS test needs two non-empty samples")
    points = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, points, side="right") / xs.size
    fy = np.searchsorted(ys, points, side="right") / ys.size
    return float(np.max(np.abs(fx - fy)))


def ks_two_sample(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Two-sided two-sample Kolmogorov-Smirnov test, asymptotic p-value."""
    d = ks_statistic(x, y)
    nx, ny = len(x), len(y)
    ne = nx * ny / (nx + ny)
    return d, max(kolmogorov_sf(math.sqrt(ne) * d), P_FLOOR)


def bh_adjust(p_values: Sequence[float]) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(p_values, dtype=float)
    m = p.size
    if m == 0:
        return p.copy()
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adjusted = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(adjusted, 1.0)
    return out
