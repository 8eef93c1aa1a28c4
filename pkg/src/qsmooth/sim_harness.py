"""Monte Carlo comparison of quantile smoothers on g-and-h data.

Each cell of the design draws ``reps`` datasets, fits every requested method,
and accumulates four criteria against the true conditional quantile:
mean squared error, bias (mean of estimate minus truth), mean of the
per-replication maximum absolute error, and mean Kendall tau between x and
the fitted values.

Replication ``k`` of a cell always uses the dataset seeded by
``substream_seed(master_seed, k)``, and totals are summed in replication
order, so results do not depend on the number of worker processes.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .core_stats import DegenerateScaleError, UndefinedCorrelationError, kendall_tau
from .gh_model import GhParams, VariancePattern, generate_dataset, substream_seed
from .smoother_r import PairedSample, method_r_fit
from .spline_baseline import fit_auto

DEFAULT_REPS = 500
TABLE2_GH = ((0.0, 0.0), (0.0, 0.2), (0.2, 0.0), (0.2, 0.2))
TABLE2_Q = (0.5, 0.75)


def fit_method_r(sample: PairedSample, q: float) -> np.ndarray:
    return method_r_fit(sample, q).theta_tilde


def fit_spline(sample: PairedSample, q: float) -> np.ndarray:
    return fit_auto(sample, q).predict(sample.x)


FITTERS: dict[str, Callable[[PairedSample, float], np.ndarray]] = {
    "r": fit_method_r,
    "spline": fit_spline,
}

_SKIPPABLE = (DegenerateScaleError, UndefinedCorrelationError)


class Criteria(NamedTuple):
    sq_err_sum: float
    err_sum: float
    max_abs: float
    tau: float


def criteria_for_fit(true_theta, fitted_theta, xs) -> Criteria:
    """Per-replication criteria; errors are taken as estimate minus truth."""
    t = np.asarray(true_theta, dtype=float)
    f = np.asarray(fitted_theta, dtype=float)
    x = np.asarray(xs, dtype=float)
    if not (t.size == f.size == x.size):
        raise ValueError(f"length mismatch: {t.size}, {f.size}, {x.size}")
    err = f - t
    return Criteria(
        sq_err_sum=float(err @ err),
        err_sum=float(err.sum()),
        max_abs=float(np.abs(err).max()),
        tau=kendall_tau(x, f),
    )


@dataclass(frozen=True)
class SimConfig:
    gh: GhParams
    vp: VariancePattern
    q: float
    n: int = 50
    reps: int = DEFAULT_REPS
    master_seed: int = 1
    methods: tuple[str, ...] = ("r", "spline")

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if self.n < 10:
            raise ValueError(f"n must be at least 10, got {self.n}")
        if self.reps < 1:
            raise ValueError(f"reps must be at least 1, got {self.reps}")
        if self.master_seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.master_seed}")
        if not self.methods:
            raise ValueError("at least one method is required")
        object.__setattr__(self, "vp", VariancePattern.parse(self.vp))


@dataclass
class MethodMetrics:
    mse: float
    bias: float
    mean_max_abs: float
    mean_tau: float

    def to_dict(self) -> dict:
        return {"mse": self.mse, "bias": self.bias, "max_abs": self.mean_max_abs, "tau": self.mean_tau}


@dataclass
class CellReport:
    config: SimConfig
    metrics: dict[str, MethodMetrics]
    replications: int
    skipped: int
    wall_time: float = 0.0
    error: str | None = None
    per_replication: list[dict[str, Criteria]] | None = field(default=None, repr=False)

    def _ratio(self, attr: str) -> float | None:
        r, s = self.metrics.get("r"), self.metrics.get("spline")
        if r is None or s is None:
            return None
        num, den = getattr(s, attr), getattr(r, attr)
        return num / den if den > 0 else math.inf

    @property
    def rmse(self) -> float | None:
        """Spline MSE divided by method-R MSE."""
        return self._ratio("mse")

    @property
    def rmax(self) -> float | None:
        """Spline mean max-abs error divided by method-R mean max-abs error."""
        return self._ratio("mean_max_abs")

    def to_dict(self) -> dict:
        c = self.config
        out = {
            "g": c.gh.g,
            "h": c.gh.h,
            "vp": c.vp.value,
            "q": c.q,
            "n": c.n,
            "k": c.reps,
            "seed": c.master_seed,
            "methods": {name: m.to_dict() for name, m in self.metrics.items()},
            "ratios": {"rmse": self.rmse, "rmax": self.rmax},
            "skipped": self.skipped,
        }
        if self.error is not None:
            out["error"] = self.error
        return out


def _replicate(config: SimConfig, k: int, fitters: Mapping[str, Callable]) -> dict[str, Criteria] | None:
    data = generate_dataset(config.n, config.gh, config.vp, substream_seed(config.master_seed, k))
    sample = PairedSample(data.x, data.y)
    truth = data.true_quantiles(config.q)
    out = {}
    try:
        for name in config.methods:
            out[name] = criteria_for_fit(truth, fitters[name](sample, config.q), data.x)
    except _SKIPPABLE:
        return None
    return out


def _replicate_chunk(args) -> list:
    config, ks = args
    return [_replicate(config, k, FITTERS) for k in ks]


def run_cell(
    config: SimConfig,
    *,
    workers: int = 1,
    fitters: Mapping[str, Callable] | None = None,
    keep_replications: bool = False,
) -> CellReport:
    """Run every replication of one design cell and aggregate the criteria.

    ``fitters`` overrides the method registry (only with ``workers == 1``).
    Replications where a fit is degenerate are skipped and counted.
    """
    start = time.perf_counter()
    unknown = set(config.methods) - set(fitters or FITTERS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")

    if workers > 1 and fitters is None:
        chunks = [range(i, min(i + 50, config.reps)) for i in range(0, config.reps, 50)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for part in pool.map(_replicate_chunk, [(config, ks) for ks in chunks]) for r in part]
    else:
        use = fitters or FITTERS
        results = [_replicate(config, k, use) for k in range(config.reps)]

    kept = [r for r in results if r is not None]
    skipped = len(results) - len(kept)
    metrics = {}
    if kept:
        npts = config.n * len(kept)
        for name in config.methods:
            sq = err = mx = tau = 0.0
            for rep in kept:
                crit = rep[name]
                sq += crit.sq_err_sum
                err += crit.err_sum
                mx += crit.max_abs
                tau += crit.tau
            metrics[name] = MethodMetrics(
                mse=sq / npts, bias=err / npts, mean_max_abs=mx / len(kept), mean_tau=tau / len(kept)
            )
    return CellReport(
        config=config,
        metrics=metrics,
        replications=len(kept),
        skipped=skipped,
        wall_time=time.perf_counter() - start,
        error=None if kept else "every replication was skipped",
        per_replication=kept if keep_replications else None,
    )


def run_grid(configs, *, workers: int = 1) -> list[CellReport]:
    """One report per config, in order. A failing cell is reported, not raised."""
    configs = list(configs)
    if not configs:
        raise ValueError("run_grid needs at least one config")
    reports = []
    for config in configs:
        try:
            reports.append(run_cell(config, workers=workers))
        except Exception as exc:  # noqa: BLE001 - isolate cells from each other
            reports.append(CellReport(config=config, metrics={}, replications=0, skipped=0, error=str(exc)))
    return reports


def table2_configs(reps: int = DEFAULT_REPS, master_seed: int = 1, n: int = 50,
                   methods: tuple[str, ...] = ("r", "spline")) -> list[SimConfig]:
    """The 24 cells of the comparison table: quantile x (g, h) x variance pattern."""
    return [
        SimConfig(gh=GhParams(g, h), vp=VariancePattern(vp), q=q, n=n, reps=reps,
                  master_seed=master_seed, methods=methods)
        for q in TABLE2_Q
        for g, h in TABLE2_GH
        for vp in (1, 2, 3)
    ]


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2) + "\n"


def _fmt(value: float | None, width: int, digits: int = 3) -> str:
    if value is None:
        return "-".rjust(width)
    return f"{value:{width}.{digits}f}"


def format_table(reports) -> str:
    """Aligned plain-text table with the comparison-table columns."""
    header = (f"{'g':>4} {'h':>4} {'VP':>3} {'q':>5} {'RMSE':>7} {'RMAX':>7} "
              f"{'BIAS-SPL':>9} {'BIAS-R':>8} {'TAU-SPL':>8} {'TAU-R':>7} {'SKIP':>5}")
    lines = [header, "-" * len(header)]
    for rep in reports:
        c = rep.config
        s, r = rep.metrics.get("spline"), rep.metrics.get("r")
        line = (f"{c.gh.g:4.1f} {c.gh.h:4.1f} {c.vp.value:3d} {c.q:5.2f} "
                f"{_fmt(rep.rmse, 7)} {_fmt(rep.rmax, 7)} "
                f"{_fmt(s and s.bias, 9)} {_fmt(r and r.bias, 8)} "
                f"{_fmt(s and s.mean_tau, 8)} {_fmt(r and r.mean_tau, 7)} {rep.skipped:5d}")
        if rep.error:
            line += f"  error: {rep.error}"
        lines.append(line)
    return "\n".join(lines) + "\n"
