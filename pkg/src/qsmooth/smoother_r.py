"""Running-interval quantile smoother with tri-cube re-smoothing ("method R").

Stage one estimates the conditional quantile at each observed x with the
Harrell-Davis estimator applied to the y values whose x lies within
``f * MADN`` of it. Stage two passes those estimates through a single
locally weighted linear fit with tri-cube weights and span ``xi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_stats import DegenerateScaleError, hd_quantile, robust_scale

DEFAULT_SPAN_F = 0.8
DEFAULT_SPAN_XI = 0.75


@dataclass(frozen=True)
class PairedSample:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.size != y.size:
            raise ValueError(f"x and y lengths differ: {x.size} vs {y.size}")
        if x.size < 2:
            raise ValueError("a paired sample needs at least two observations")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.x.size


@dataclass(frozen=True)
class QuantileFit:
    x: np.ndarray
    q: float
    span_f: float
    span_xi: float
    theta_hat: np.ndarray
    theta_tilde: np.ndarray

    def sorted_line(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, theta_tilde) ordered by x, ready to draw as a polyline."""
        order = np.argsort(self.x, kind="stable")
        return self.x[order], self.theta_tilde[order]


def _window_radius(xs: np.ndarray, f: float) -> float:
    if not f > 0:
        raise ValueError(f"span f must be positive, got {f}")
    madn = robust_scale(xs).madn
    if madn == 0.0:
        raise DegenerateScaleError(
            "MADN of x is zero (at least half of the x values are tied); "
            "running-interval windows are undefined"
        )
    return f * madn


def neighborhood(xs, i: int, f: float) -> np.ndarray:
    """Indices j with ``|x_j - x_i| <= f * MADN(x)``, ascending."""
    x = np.asarray(xs, dtype=float)
    radius = _window_radius(x, f)
    return np.flatnonzero(np.abs(x - x[i]) <= radius)


def running_interval_fit(sample: PairedSample, q: float, f: float = DEFAULT_SPAN_F) -> np.ndarray:
    """Stage-one estimates: Harrell-Davis quantile of y over each x's neighborhood."""
    x, y = sample.x, sample.y
    radius = _window_radius(x, f)
    close = np.abs(x[:, None] - x[None, :]) <= radius
    return np.array([hd_quantile(y[row], q) for row in close])


def _retained_count(n: int, xi: float) -> int:
    if not (0.0 < xi <= 1.0):
        raise ValueError(f"span xi must lie in (0, 1], got {xi}")
    # Rounding first guards against products like 0.7 * 10 = 7.000000000000001.
    return min(n, max(1, math.ceil(round(xi * n, 9))))


def tricube_weights(xs, j: int, xi: float = DEFAULT_SPAN_XI) -> np.ndarray:
    """Tri-cube weights of every point for a local fit centred on ``xs[j]``.

    The ``ceil(xi * n)`` points nearest ``xs[j]`` are retained (ties go to the
    lower index). Distances are scaled by the largest retained distance; if
    that distance is zero every retained point gets weight one.
    """
    x = np.asarray(xs, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("tricube_weights needs at least two points")
    m = _retained_count(n, xi)
    delta = np.abs(x - x[j])
    retained = np.argsort(delta, kind="stable")[:m]
    delta_m = delta[retained].max()
    w = np.zeros(n)
    if delta_m == 0.0:
        w[retained] = 1.0
        return w
    qd = delta / delta_m
    inside = qd < 1.0
    w[inside] = (1.0 - qd[inside] ** 3) ** 3
    return w


def _local_linear(x: np.ndarray, t: np.ndarray, w: np.ndarray, x0: float) -> float:
    pos = w > 0
    xw, tw, ww = x[pos], t[pos], w[pos]
    sw = ww.sum()
    tbar = float(ww @ tw) / sw
    if np.ptp(xw) == 0.0:
        return tbar
    xbar = float(ww @ xw) / sw
    dx = xw - xbar
    sxx = float(ww @ (dx * dx))
    slope = float(ww @ (dx * (tw - tbar))) / sxx
    return tbar + slope * (x0 - xbar)


def lowess_resmooth(xs, theta_hat, xi: float = DEFAULT_SPAN_XI) -> np.ndarray:
    """Re-smooth ``theta_hat`` by tri-cube weighted least squares at every x."""
    x = np.asarray(xs, dtype=float)
    t = np.asarray(theta_hat, dtype=float)
    if x.size != t.size:
        raise ValueError(f"length mismatch: {x.size} vs {t.size}")
    return np.array([_local_linear(x, t, tricube_weights(x, j, xi), x[j]) for j in range(x.size)])


def method_r_fit(
    sample: PairedSample,
    q: float,
    f: float = DEFAULT_SPAN_F,
    xi: float = DEFAULT_SPAN_XI,
) -> QuantileFit:
    """Fit the running-interval Harrell-Davis smoother and re-smooth it.

    Raises DegenerateScaleError when MADN of x is zero.
    """
    if not (0.0 < q < 1.0):
        raise ValueError(f"q must lie in (0, 1), got {q}")
    theta_hat = running_interval_fit(sample, q, f)
    theta_tilde = lowess_resmooth(sample.x, theta_hat, xi)
    return QuantileFit(
        x=sample.x, q=q, span_f=f, span_xi=xi, theta_hat=theta_hat, theta_tilde=theta_tilde
    )
