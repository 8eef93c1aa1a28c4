"""g-and-h error distributions, heteroscedasticity patterns and synthetic data.

Synthetic data follow ``Y = X + lambda(X) * W`` with ``X`` standard normal and
``W`` a g-and-h variate. Normal draws come from the inverse normal CDF applied
to a Philox (counter-based) uniform stream, so a seed fully determines a
dataset on any platform.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core_stats import inv_norm_cdf


@dataclass(frozen=True)
class GhParams:
    g: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        if not (self.g >= 0.0 and self.h >= 0.0):
            raise ValueError(f"g and h must be nonnegative, got g={self.g}, h={self.h}")
        if not (math.isfinite(self.g) and math.isfinite(self.h)):
            raise ValueError("g and h must be finite")


class VariancePattern(enum.Enum):
    """Heteroscedasticity patterns lambda(x)."""

    VP1 = 1  # lambda(x) = 1
    VP2 = 2  # lambda(x) = |x| + 1
    VP3 = 3  # lambda(x) = 1 / (|x| + 1)

    @classmethod
    def parse(cls, value) -> "VariancePattern":
        """Accept a VariancePattern, an int 1-3, or strings like ``"2"`` / ``"VP2"``."""
        if isinstance(value, cls):
            return value
        text = str(value).strip().upper()
        if text.startswith("VP"):
            text = text[2:]
        try:
            return cls(int(text))
        except (ValueError, TypeError):
            raise ValueError(f"unknown variance pattern {value!r}; expected 1, 2 or 3") from None


def gh_transform(z, gh: GhParams):
    """Map standard normal value(s) ``z`` to the g-and-h scale."""
    z_arr = np.asarray(z, dtype=float)
    if gh.g > 0.0:
        base = np.expm1(gh.g * z_arr) / gh.g
    else:
        base = z_arr
    out = base * np.exp(gh.h * z_arr * z_arr / 2.0) if gh.h > 0.0 else np.array(base)
    if out.ndim == 0:
        return float(out)
    return out


def gh_quantile(p, gh: GhParams):
    """Exact ``p``th quantile of the g-and-h distribution (the transform is monotone)."""
    return gh_transform(inv_norm_cdf(p), gh)


def _raw_moment(k: int, gh: GhParams) -> float:
    g, h = gh.g, gh.h
    log_coef = -0.5 * math.log(2.0 * math.pi)

    # Evaluated in log space: QUADPACK probes |z| near 1e300 on infinite ranges.
    def integrand(z):
        if z == 0.0:
            return 0.0
        if g > 0.0:
            gz = g * z
            log_base = gz + math.log1p(-math.exp(-gz)) if gz > 30.0 else math.log(abs(math.expm1(gz)))
            log_base -= math.log(g)
        else:
            log_base = math.log(abs(z))
        sign = -1.0 if (z < 0.0 and k % 2) else 1.0
        return sign * math.exp(k * log_base + (k * h - 1.0) * z * z / 2.0 + log_coef)

    total = 0.0
    # Splitting at 0 keeps QUADPACK's infinite-range transform well conditioned.
    for lo, hi in ((-math.inf, 0.0), (0.0, math.inf)):
        val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)
        total += val
    return total


def gh_moments(gh: GhParams) -> tuple[float, float]:
    """Skewness and kurtosis of the g-and-h distribution by numerical quadrature.

    The fourth moment exists only for ``h < 1/4``.
    """
    if gh.h >= 0.25:
        raise ValueError(f"the fourth moment does not exist for h >= 0.25 (h={gh.h})")
    m1, m2, m3, m4 = (_raw_moment(k, gh) for k in (1, 2, 3, 4))
    var = m2 - m1 * m1
    mu3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 ** 3
    mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 ** 4
    return mu3 / var ** 1.5, mu4 / var ** 2


def lambda_at(vp: VariancePattern, x):
    """Scale function lambda(x) of a variance pattern; always positive."""
    x_arr = np.abs(np.asarray(x, dtype=float))
    if vp is VariancePattern.VP1:
        out = np.ones_like(x_arr)
    elif vp is VariancePattern.VP2:
        out = x_arr + 1.0
    elif vp is VariancePattern.VP3:
        out = 1.0 / (x_arr + 1.0)
    else:
        raise ValueError(f"unknown variance pattern {vp!r}")
    if out.ndim == 0:
        return float(out)
    return out


def true_conditional_quantile(x, q: float, gh: GhParams, vp: VariancePattern):
    """Conditional ``q``th quantile of Y given X = x under the simulation model."""
    shift = gh_quantile(q, gh)
    if np.ndim(x) == 0:
        return float(x) + lambda_at(vp, x) * shift
    return np.asarray(x, dtype=float) + lambda_at(vp, x) * shift


def uniform_stream(seed: int, size: int) -> np.ndarray:
    """``size`` uniforms strictly inside (0, 1) from a Philox stream keyed by ``seed``."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    key = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    bits = np.random.Philox(key=key).random_raw(size)
    # Top 53 bits, offset by half a step: never exactly 0 or 1.
    return ((bits >> np.uint64(11)).astype(float) + 0.5) / 9007199254740992.0


def substream_seed(master_seed: int, index: int) -> int:
    """Derive a replication seed by hashing ``(master_seed, index)``."""
    if master_seed < 0 or index < 0:
        raise ValueError("master_seed and index must be nonnegative")
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SyntheticDataset:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    gh: GhParams
    vp: VariancePattern
    seed: int

    @property
    def n(self) -> int:
        return self.x.size

    def true_quantiles(self, q: float) -> np.ndarray:
        return true_conditional_quantile(self.x, q, self.gh, self.vp)


def response(x: np.ndarray, z: np.ndarray, gh: GhParams, vp: VariancePattern) -> np.ndarray:
    return x + lambda_at(vp, x) * gh_transform(z, gh)


def generate_dataset(n: int, gh: GhParams, vp: VariancePattern, seed: int) -> SyntheticDataset:
    """Draw ``n`` pairs (x, y) from the simulation model, deterministically per seed."""
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    u = uniform_stream(seed, 2 * n).reshape(n, 2)
    x = inv_norm_cdf(u[:, 0])
    z = inv_norm_cdf(u[:, 1])
    y = response(x, z, gh, vp)
    for arr in (x, y, z):
        arr.setflags(write=False)
    return SyntheticDataset(x=x, y=y, z=z, gh=gh, vp=vp, seed=int(seed))
