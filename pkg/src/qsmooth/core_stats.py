"""Scalar statistical primitives used by the smoothers and the simulation harness.

Everything here is a pure function of its arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

MADN_CONSTANT = 0.6745

_BETACF_EPS = 1e-14
_BETACF_MAXITER = 300
_TINY = 1e-300


class DegenerateScaleError(ValueError):
    """Raised when a robust scale estimate is zero and a window cannot be formed."""


class UndefinedCorrelationError(ValueError):
    """Raised when a rank correlation is undefined (one variable is constant)."""


@dataclass(frozen=True)
class HdWeights:
    n: int
    q: float
    w: np.ndarray


@dataclass(frozen=True)
class RobustScale:
    median: float
    mad: float
    madn: float


def _betacf(x: float, a: float, b: float) -> float:
    # Modified Lentz evaluation of the incomplete beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAXITER + 1):
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
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})"
    )


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Evaluated with a continued fraction, switching to ``1 - I_{1-x}(b, a)``
    when ``x > (a + 1) / (a + b + 2)`` so the fraction converges quickly.
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(x, a, b) / a
    return 1.0 - front * _betacf(1.0 - x, b, a) / b


# Acklam's rational approximation to the normal quantile function.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p: np.ndarray) -> np.ndarray:
    out = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    if lo.any():
        t = np.sqrt(-2.0 * np.log(p[lo]))
        out[lo] = (((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / (
            (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        )
    if hi.any():
        t = np.sqrt(-2.0 * np.log1p(-p[hi]))
        out[hi] = -(((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / (
            (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        )
    if mid.any():
        s = p[mid] - 0.5
        r = s * s
        out[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    return out


def inv_norm_cdf(p):
    """Standard normal quantile function.

    Accepts a scalar or an array. A rational approximation is refined with one
    Halley step; the error in probability is well below 1e-9. Values are
    computed on the lower half and reflected so that ``inv(1 - p) == -inv(p)``
    for exactly representable complements.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    upper = arr > 0.5
    lower_p = np.where(upper, 1.0 - arr, arr)
    x = _acklam(np.atleast_1d(lower_p)).reshape(arr.shape)
    # One Halley step on Phi(x) - p, using the lower-tail probability.
    e = ndtr(x) - lower_p
    u = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    x = np.where(upper, -x, x)
    if np.ndim(p) == 0:
        return float(x)
    return x


@lru_cache(maxsize=4096)
def _hd_weight_vector(n: int, q: float) -> np.ndarray:
    a = (n + 1) * q
    b = (n + 1) * (1.0 - q)
    cdf = np.array([reg_inc_beta(i / n, a, b) for i in range(n + 1)])
    w = np.diff(cdf)
    # Differences of a monotone CDF can dip below zero by rounding only.
    np.maximum(w, 0.0, out=w)
    w.setflags(write=False)
    return w


def hd_weights(n: int, q: float) -> HdWeights:
    """Harrell-Davis weights for a sample of size ``n`` at quantile ``q``."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if not (0.0 < q < 1.0):
        raise ValueError(f"q must lie in (0, 1), got {q}")
    return HdWeights(n=n, q=float(q), w=_hd_weight_vector(n, float(q)))


def hd_quantile(values, q: float) -> float:
    """Harrell-Davis estimate of the ``q``th quantile of ``values``."""
    z = np.sort(np.asarray(values, dtype=float).ravel())
    if z.size == 0:
        raise ValueError("hd_quantile needs at least one value")
    w = hd_weights(z.size, q).w
    est = float(w @ z)
    # The weights sum to one only up to rounding; keep the estimate in range.
    return min(max(est, z[0]), z[-1])


def robust_scale(values) -> RobustScale:
    """Median, MAD and normalized MAD (MAD / 0.6745) of ``values``."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("robust_scale needs at least one value")
    med = float(np.median(v))
    mad = float(np.median(np.abs(v - med)))
    return RobustScale(median=med, mad=mad, madn=mad / MADN_CONSTANT)


def pinball(u, q: float):
    """Check loss ``u * (q - I(u < 0))``; works elementwise on arrays."""
    if not (0.0 < q < 1.0):
        raise ValueError(f"q must lie in (0, 1), got {q}")
    u_arr = np.asarray(u, dtype=float)
    out = np.where(u_arr < 0, u_arr * (q - 1.0), u_arr * q)
    if out.ndim == 0:
        return float(out)
    return out


def kendall_tau(xs, ys) -> float:
    """Kendall's tau-b between two equally long sequences."""
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("kendall_tau needs at least two pairs")
    iu = np.triu_indices(x.size, k=1)
    sx = np.sign(x[:, None] - x[None, :])[iu]
    sy = np.sign(y[:, None] - y[None, :])[iu]
    untied_x = np.count_nonzero(sx)
    untied_y = np.count_nonzero(sy)
    if untied_x == 0 or untied_y == 0:
        raise UndefinedCorrelationError("kendall_tau is undefined when either variable is constant")
    s = float(np.dot(sx, sy))
    tau = s / math.sqrt(float(untied_x) * float(untied_y))
    return max(-1.0, min(1.0, tau))
