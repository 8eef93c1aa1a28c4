"""Quadratic B-spline quantile smoother, a simplified COBS-style baseline.

Coefficients minimize the summed check loss exactly by linear programming.
The number of interior knots is picked with a Schwarz-type criterion; knots
sit at equally spaced sample quantiles of x. There is no roughness penalty
and no shape constraint.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._simplex import simplex
from .core_stats import pinball
from .smoother_r import PairedSample

DEGREE = 2
MAX_INTERIOR_KNOTS = 10


def clamped_knot_vector(interior_knots, lo: float, hi: float, degree: int = DEGREE) -> np.ndarray:
    interior = np.asarray(interior_knots, dtype=float).ravel()
    if interior.size and (np.any(np.diff(interior) <= 0) or interior[0] <= lo or interior[-1] >= hi):
        raise ValueError("interior knots must be strictly ascending and inside (lo, hi)")
    if not lo < hi:
        raise ValueError(f"knot range is empty: [{lo}, {hi}]")
    return np.concatenate([np.full(degree + 1, lo), interior, np.full(degree + 1, hi)])


def design_matrix(knot_vector, degree: int, xs) -> np.ndarray:
    """B-spline basis values, one row per point, via the Cox-de Boor recursion.

    The last nonempty knot span is closed on the right so the final knot is
    inside the support.
    """
    t = np.asarray(knot_vector, dtype=float)
    x = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(np.diff(t) < 0):
        raise ValueError("knot vector must be nondecreasing")
    if np.any((x < t[0]) | (x > t[-1])):
        raise ValueError(f"x outside the knot range [{t[0]}, {t[-1]}]")
    n_spans = t.size - 1
    B = ((t[:-1][None, :] <= x[:, None]) & (x[:, None] < t[1:][None, :])).astype(float)
    last = np.flatnonzero(t[1:] > t[:-1])[-1]
    B[x == t[-1], last] = 1.0
    for d in range(1, degree + 1):
        width = n_spans - d
        nxt = np.zeros((x.size, width))
        for i in range(width):
            left = t[i + d] - t[i]
            right = t[i + d + 1] - t[i + 1]
            if left > 0:
                nxt[:, i] += (x - t[i]) / left * B[:, i]
            if right > 0:
                nxt[:, i] += (t[i + d + 1] - x) / right * B[:, i + 1]
        B = nxt
    return B


def bspline_basis(knot_vector, degree: int, x: float) -> np.ndarray:
    """Values of all B-spline basis functions at a single point."""
    return design_matrix(knot_vector, degree, [x])[0]


@dataclass(frozen=True)
class SplineModel:
    degree: int
    knot_vector: np.ndarray
    interior_knots: np.ndarray
    coeffs: np.ndarray
    q: float
    objective: float

    @property
    def n_params(self) -> int:
        return self.coeffs.size

    def predict(self, xs) -> np.ndarray:
        return design_matrix(self.knot_vector, self.degree, xs) @ self.coeffs


def _solve_pinball_lp(B: np.ndarray, y: np.ndarray, q: float) -> np.ndarray:
    # Variables [c+, c-, u, v] with B(c+ - c-) + u - v = y and cost q*u + (1-q)*v.
    n, p = B.shape
    A = np.hstack([B, -B, np.eye(n), -np.eye(n)])
    cost = np.concatenate([np.zeros(2 * p), np.full(n, q), np.full(n, 1.0 - q)])
    start = np.where(y >= 0, 2 * p + np.arange(n), 2 * p + n + np.arange(n))
    res = simplex(cost, A, y, basis=start)
    return res.x[:p] - res.x[p:2 * p]


def fit_quantile_spline(sample: PairedSample, q: float, interior_knots, degree: int = DEGREE) -> SplineModel:
    """Exact check-loss minimizing B-spline with the given interior knots."""
    if not (0.0 < q < 1.0):
        raise ValueError(f"q must lie in (0, 1), got {q}")
    x, y = sample.x, sample.y
    knots = clamped_knot_vector(interior_knots, float(x.min()), float(x.max()), degree)
    B = design_matrix(knots, degree, x)
    p = B.shape[1]
    if p > x.size:
        raise ValueError(f"basis dimension {p} exceeds the sample size {x.size}")
    if np.linalg.matrix_rank(B) < p:
        warnings.warn("spline basis columns are collinear on the data", RuntimeWarning, stacklevel=2)
    coeffs = _solve_pinball_lp(B, y, q)
    objective = float(np.sum(pinball(y - B @ coeffs, q)))
    return SplineModel(
        degree=degree,
        knot_vector=knots,
        interior_knots=knots[degree + 1:-(degree + 1)],
        coeffs=coeffs,
        q=q,
        objective=objective,
    )


def sic_score(objective: float, n: int, p: int) -> float:
    """Schwarz-type criterion ``log(objective / n) + (p / 2) log(n) / n``.

    A zero objective scores ``-inf``.
    """
    if not (n > p >= 1):
        raise ValueError(f"need n > p >= 1, got n={n}, p={p}")
    if objective < 0:
        raise ValueError("objective must be nonnegative")
    if objective == 0.0:
        return -math.inf
    return math.log(objective / n) + 0.5 * p * math.log(n) / n


def quantile_knots(x, k: int) -> np.ndarray:
    """``k`` knots at equally spaced sample quantiles of x (duplicates dropped)."""
    if k == 0:
        return np.empty(0)
    x = np.asarray(x, dtype=float)
    knots = np.unique(np.quantile(x, np.arange(1, k + 1) / (k + 1)))
    return knots[(knots > x.min()) & (knots < x.max())]


def fit_auto(sample: PairedSample, q: float, max_knots: int = MAX_INTERIOR_KNOTS) -> SplineModel:
    """Fit quadratic splines with 0..min(max_knots, n // 4) interior knots; keep the SIC best."""
    n = len(sample)
    if n < 10:
        raise ValueError(f"automatic knot selection needs n >= 10, got {n}")
    scale = max(1.0, float(np.max(np.abs(sample.y))))
    best, best_score = None, math.inf
    for k in range(min(max_knots, n // 4) + 1):
        knots = quantile_knots(sample.x, k)
        if knots.size != k:
            continue  # tied x values collapse knots; this k duplicates a smaller one
        model = fit_quantile_spline(sample, q, knots)
        # Objectives at rounding level count as exact fits.
        objective = 0.0 if model.objective <= 1e-12 * n * scale else model.objective
        score = sic_score(objective, n, model.n_params)
        if best is None or score < best_score:
            best, best_score = model, score
    return best
