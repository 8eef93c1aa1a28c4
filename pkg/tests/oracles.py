"""Independent reference computations used only by the tests."""
import itertools
import math

import mpmath
import numpy as np
from scipy import integrate


def beta_cdf_quad(x, a, b):
    """I_x(a, b) by adaptive quadrature of the beta density.

    The algebraic endpoint weight absorbs the t**(a-1) singularity; the upper
    half is reflected so the singular end is always at zero.
    """
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    if x > 0.5:
        return 1.0 - beta_cdf_quad(1.0 - x, b, a)
    log_beta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    val, _ = integrate.quad(
        lambda t: (1.0 - t) ** (b - 1.0), 0.0, x,
        weight="alg", wvar=(a - 1.0, 0.0), epsabs=1e-15, epsrel=1e-13, limit=200,
    )
    # weight='alg' integrates f(t) * (t - 0)^(a-1) * (x - t)^0.
    return val / math.exp(log_beta)


def hd_quadrature(values, q):
    z = np.sort(np.asarray(values, dtype=float))
    n = z.size
    a, b = (n + 1) * q, (n + 1) * (1 - q)
    cdf = [beta_cdf_quad(i / n, a, b) for i in range(n + 1)]
    return sum((cdf[i + 1] - cdf[i]) * z[i] for i in range(n))


def norm_ppf_bisect(p, digits=30):
    """Normal quantile by bisection on a high-precision Phi."""
    with mpmath.workdps(digits):
        p = mpmath.mpf(p)
        lo, hi = mpmath.mpf(-40), mpmath.mpf(40)
        for _ in range(200):
            mid = (lo + hi) / 2
            if mpmath.ncdf(mid) < p:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


def kendall_brute(xs, ys):
    """tau-b by explicit pair enumeration."""
    conc = disc = tx = ty = 0
    n0 = 0
    for i, j in itertools.combinations(range(len(xs)), 2):
        n0 += 1
        dx = xs[i] - xs[j]
        dy = ys[i] - ys[j]
        if dx == 0:
            tx += 1
        if dy == 0:
            ty += 1
        if dx * dy > 0:
            conc += 1
        elif dx * dy < 0:
            disc += 1
    return (conc - disc) / math.sqrt((n0 - tx) * (n0 - ty))


def pinball_objective(residuals, q):
    r = np.asarray(residuals, dtype=float)
    return float(np.sum(np.where(r < 0, r * (q - 1), r * q)))


def grid_min_pinball(B, y, q, start, radius=4.0, steps=21, rounds=400, tol=1e-7, rotations=12):
    """Minimize the check loss over coefficient vectors by grid search.

    The grid is recentred on the best point each round. A piecewise-linear
    convex objective can have descent cones too thin for an axis-aligned grid
    to hit, so a stalled round retries with randomly rotated grids before the
    radius is shrunk.
    """
    rng = np.random.default_rng(0)
    center = np.asarray(start, dtype=float)
    best = pinball_objective(y - B @ center, q)
    p = center.size
    axis = np.linspace(-1.0, 1.0, steps)
    unit = np.stack(np.meshgrid(*([axis] * p), indexing="ij"), axis=-1).reshape(-1, p)
    stalls = 0
    for _ in range(rounds):
        mesh = unit if stalls == 0 else unit @ np.linalg.qr(rng.normal(size=(p, p)))[0]
        cand = center + radius * mesh
        res = y[None, :] - cand @ B.T
        obj = np.sum(np.where(res < 0, res * (q - 1), res * q), axis=1)
        k = int(np.argmin(obj))
        if obj[k] < best - 1e-15:
            best, center, stalls = float(obj[k]), cand[k], 0
        elif stalls < rotations:
            stalls += 1
        else:
            radius *= 0.3
            stalls = 0
            if radius < tol:
                break
    return best, center


def subset_min_pinball(B, y, q):
    """Exact minimum of the check loss: some optimum interpolates p points."""
    n, p = B.shape
    best = math.inf
    for rows in itertools.combinations(range(n), p):
        sub = B[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        c = np.linalg.solve(sub, y[list(rows)])
        best = min(best, pinball_objective(y - B @ c, q))
    return best
