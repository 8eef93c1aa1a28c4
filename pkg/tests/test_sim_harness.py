import json
import math

import numpy as np
import pytest

from qsmooth.core_stats import kendall_tau
from qsmooth.gh_model import GhParams, VariancePattern, generate_dataset, substream_seed
from qsmooth.sim_harness import (
    SimConfig,
    criteria_for_fit,
    format_table,
    reports_to_json,
    run_cell,
    run_grid,
    table2_configs,
)
from qsmooth.smoother_r import PairedSample, method_r_fit


def naive_criteria(true_theta, fitted, xs):
    sq = err = mx = 0.0
    for t, f in zip(true_theta, fitted):
        sq += (f - t) ** 2
        err += f - t
        mx = max(mx, abs(f - t))
    conc = disc = 0
    n = len(xs)
    for i in range(n):
        for j in range(i + 1, n):
            s = (xs[i] - xs[j]) * (fitted[i] - fitted[j])
            conc += s > 0
            disc += s < 0
    return sq, err, mx, (conc - disc) / (n * (n - 1) / 2)


def small_config(**kw):
    base = dict(gh=GhParams(0, 0), vp=VariancePattern.VP1, q=0.5, n=30, reps=6, master_seed=3)
    base.update(kw)
    return SimConfig(**base)


class TestCriteria:
    def test_perfect(self):
        x = np.linspace(-1, 1, 10)
        c = criteria_for_fit(x, x, x)
        assert (c.sq_err_sum, c.err_sum, c.max_abs, c.tau) == (0.0, 0.0, 0.0, 1.0)

    def test_constant_offset(self):
        x = np.random.default_rng(0).normal(size=50)
        truth = x + 1.0
        c = criteria_for_fit(truth, truth + 0.1, x)
        assert c.sq_err_sum == pytest.approx(0.5, abs=1e-12)
        assert c.err_sum == pytest.approx(5.0, abs=1e-12)
        assert c.max_abs == pytest.approx(0.1, abs=1e-12)
        assert c.tau == kendall_tau(x, truth)

    def test_naive_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            x, t, f = rng.normal(size=(3, 5))
            c = criteria_for_fit(t, f, x)
            assert np.allclose(tuple(c), naive_criteria(t, f, x), atol=1e-12)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            criteria_for_fit([1, 2], [1, 2, 3], [1, 2])


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(q=1.0), dict(n=5), dict(reps=0), dict(master_seed=-1), dict(methods=())])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            small_config(**kw)

    def test_vp_coercion(self):
        assert small_config(vp="2").vp is VariancePattern.VP2


class TestRunCell:
    def test_perfect_stub(self):
        cfg = small_config(reps=1, methods=("truth",))
        rep = run_cell(cfg, fitters={"truth": lambda s, q: s.x.copy()})
        m = rep.metrics["truth"]
        assert (m.mse, m.bias, m.mean_max_abs) == (0.0, 0.0, 0.0)
        assert m.mean_tau == 1.0
        assert rep.rmse is None

    def test_deterministic(self):
        cfg = small_config()
        a, b = run_cell(cfg), run_cell(cfg)
        assert reports_to_json([a]) == reports_to_json([b])

    def test_workers_do_not_change_output(self):
        cfg = small_config(reps=60, methods=("r",))
        assert reports_to_json([run_cell(cfg)]) == reports_to_json([run_cell(cfg, workers=2)])

    def test_independent_streaming_pass(self):
        cfg = small_config(reps=12, q=0.75, vp=VariancePattern.VP2, methods=("r",))
        rep = run_cell(cfg, keep_replications=True)
        sq, err, mx, taus = [], [], [], []
        for k in range(cfg.reps):
            d = generate_dataset(cfg.n, cfg.gh, cfg.vp, substream_seed(cfg.master_seed, k))
            fit = method_r_fit(PairedSample(d.x, d.y), cfg.q).theta_tilde
            e = fit - d.true_quantiles(cfg.q)
            sq.extend(e ** 2)
            err.extend(e)
            mx.append(np.abs(e).max())
            taus.append(kendall_tau(d.x, fit))
        m = rep.metrics["r"]
        assert m.mse == pytest.approx(np.mean(sq), abs=1e-12)
        assert m.bias == pytest.approx(np.mean(err), abs=1e-12)
        assert m.mean_max_abs == pytest.approx(np.mean(mx), abs=1e-12)
        assert m.mean_tau == pytest.approx(np.mean(taus), abs=1e-12)

    def test_cell_invariants(self):
        rep = run_cell(small_config(reps=10, vp=VariancePattern.VP2), keep_replications=True)
        for name, m in rep.metrics.items():
            assert m.mse >= 0 and m.mean_max_abs >= 0 and -1 <= m.mean_tau <= 1
            assert m.bias ** 2 <= m.mse
        for crit in rep.per_replication:
            for c in crit.values():
                assert c.max_abs >= math.sqrt(c.sq_err_sum / 30) - 1e-12
        assert rep.rmse > 0 and rep.rmax > 0

    def test_skips_degenerate(self):
        calls = []

        def sometimes_degenerate(sample, q):
            calls.append(1)
            if len(calls) % 2:
                return np.full(sample.x.size, 1.0)  # constant fit: tau undefined
            return sample.x.copy()

        rep = run_cell(small_config(reps=6, methods=("stub",)), fitters={"stub": sometimes_degenerate})
        assert rep.skipped == 3
        assert rep.replications == 3

    def test_all_skipped(self):
        rep = run_cell(small_config(reps=2, methods=("stub",)), fitters={"stub": lambda s, q: np.zeros(s.x.size)})
        assert rep.error and rep.skipped == 2 and rep.metrics == {}

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            run_cell(small_config(methods=("nope",)))


class TestGrid:
    def test_single_cell_identity(self):
        cfg = small_config()
        assert reports_to_json(run_grid([cfg])) == reports_to_json([run_cell(cfg)])

    def test_reordering(self):
        cfgs = [small_config(vp=VariancePattern(v), q=q, methods=("r",)) for v in (1, 2, 3) for q in (0.5, 0.75)]
        forward = [r.to_dict() for r in run_grid(cfgs)]
        backward = [r.to_dict() for r in run_grid(cfgs[::-1])]
        assert forward == backward[::-1]

    def test_table2_shape(self):
        cfgs = table2_configs(reps=200, master_seed=1)
        assert len(cfgs) == 24
        tags = {(c.gh.g, c.gh.h, c.vp.value, c.q) for c in cfgs}
        assert len(tags) == 24
        assert all(c.n == 50 and c.reps == 200 for c in cfgs)

    def test_failing_cell_isolated(self):
        bad = small_config(methods=("nope",))
        good = small_config(methods=("r",))
        reports = run_grid([bad, good])
        assert reports[0].error and reports[1].error is None

    def test_empty(self):
        with pytest.raises(ValueError):
            run_grid([])


class TestOutput:
    def test_json_schema(self):
        rep = run_cell(small_config(reps=3))
        cell = json.loads(reports_to_json([rep]))[0]
        assert set(cell) == {"g", "h", "vp", "q", "n", "k", "seed", "methods", "ratios", "skipped"}
        assert set(cell["methods"]) == {"r", "spline"}
        assert set(cell["methods"]["r"]) == {"mse", "bias", "max_abs", "tau"}
        assert set(cell["ratios"]) == {"rmse", "rmax"}
        assert cell["ratios"]["rmse"] == pytest.approx(cell["methods"]["spline"]["mse"] / cell["methods"]["r"]["mse"])

    def test_table(self):
        text = format_table(run_grid([small_config(reps=2), small_config(reps=2, methods=("r",))]))
        lines = text.splitlines()
        assert lines[0].split()[:6] == ["g", "h", "VP", "q", "RMSE", "RMAX"]
        assert len(lines) == 4
        assert " - " in lines[3]


def test_vp1_truth_has_unit_tau():
    d = generate_dataset(50, GhParams(0.2, 0.2), VariancePattern.VP1, 5)
    assert kendall_tau(d.x, d.true_quantiles(0.75)) == 1.0


@pytest.mark.slow
def test_symmetric_bias_shrinks():
    rep = run_cell(SimConfig(GhParams(0, 0), VariancePattern.VP1, 0.5, reps=2000, master_seed=11, methods=("r",)))
    assert abs(rep.metrics["r"].bias) < 0.02
