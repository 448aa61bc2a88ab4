from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest

from privmarket.config import default_config, apply_overrides
from privmarket.graph import Graph
from privmarket.mechanism import MechanismConfig
from privmarket.model import substream
from privmarket.sim import (
    ZeroVarianceError,
    map_estimate,
    normality_probe,
    run_experiment,
    run_trial,
    simresult_csv,
    sweep,
    sweep_csv,
)
from privmarket.strategy import (
    ActionDistribution,
    DegreeStrategy,
    StrategyEntry,
    StrategyTable,
    mv_strategy_table,
    nd_baseline_table,
)

from conftest import make_params


def _summary(mu1, kappa):
    return SimpleNamespace(mu0=1.0 - mu1, mu1=mu1, kappa0=kappa, kappa1=kappa)


class TestMapEstimate:
    def test_equal_priors_thresholds_at_half(self):
        s = _summary(0.65, 0.4)
        assert map_estimate(0.6 * 250, 250, s, 0.5) == 1
        assert map_estimate(0.4 * 250, 250, s, 0.5) == 0

    def test_tie_decides_zero(self):
        s = _summary(0.65, 0.4)
        assert map_estimate(125, 250, s, 0.5) == 0

    def test_depends_on_sum_alone(self):
        # permuting reports cannot change the estimate: only the sum enters
        s = _summary(0.6, 0.3)
        reports = [1, 0, 1, 1, 0, 1]
        assert map_estimate(sum(reports), 6, s, 0.5) == map_estimate(
            sum(reversed(reports)), 6, s, 0.5
        )


def _simple_mech():
    return MechanismConfig(z=1.0, z0=1.0, z1=1.0, beta0=0.99, beta1=0.99, epsilon=0.1)


class TestRunTrial:
    def test_noiseless_agreeing_group_signals_follow_majority(self):
        # 4-cycle: every user has degree 2; alpha = 0 and theta0 near 1 make
        # all signals equal w, so f = 2 for everyone: report w w.p. 1
        params = make_params(alpha=0.0, theta0=1.0 - 1e-12, population=4)
        graph = Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
        table = mv_strategy_table(params)
        result = run_trial(
            substream(3, 5, 0), graph, table, _simple_mech(), params, _summary(0.9, 0.2)
        )
        assert np.all(result.reports == result.w)

    def test_nd_baseline_has_zero_privacy_costs(self):
        params = make_params(population=6)
        graph = Graph(6, [(i, (i + 1) % 6) for i in range(6)])
        result = run_trial(
            substream(3, 5, 1), graph, nd_baseline_table(), _simple_mech(), params,
            _summary(0.6, 0.3),
        )
        assert np.all(result.privacy_costs == 0.0)

    def test_fixed_seed_reproduces_bytes(self):
        params = make_params(population=6)
        graph = Graph(6, [(i, (i + 1) % 6) for i in range(6)])
        table = mv_strategy_table(params)
        a = run_trial(substream(3, 5, 2), graph, table, _simple_mech(), params, _summary(0.6, 0.3))
        b = run_trial(substream(3, 5, 2), graph, table, _simple_mech(), params, _summary(0.6, 0.3))
        assert a.w == b.w and a.sum_reports == b.sum_reports
        assert a.reports.tobytes() == b.reports.tobytes()
        assert a.payments.tobytes() == b.payments.tobytes()
        assert a.privacy_costs.tobytes() == b.privacy_costs.tobytes()

    def test_uncovered_degree_raises(self):
        params = make_params(population=6)
        graph = Graph(6, [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)])  # star: degree 5 hub
        short_table = mv_strategy_table(params, d_max=2, extend_on_demand=False)
        with pytest.raises(KeyError, match="coverage"):
            run_trial(
                substream(3, 5, 9), graph, short_table, _simple_mech(), params,
                _summary(0.6, 0.3),
            )

    def test_payments_nonnegative(self):
        params = make_params(population=6)
        graph = Graph(6, [(i, (i + 1) % 6) for i in range(6)])
        for k in range(10):
            result = run_trial(
                substream(3, 5, 10 + k), graph, mv_strategy_table(params), _simple_mech(),
                params, _summary(0.6, 0.3),
            )
            assert np.all(result.payments >= 0.0)


class TestEngineMatchesMechanismOps:
    def test_vectorized_payments_agree_with_scalar_mechanism(self):
        from privmarket.mechanism import majority_excluding, peer_payment

        params = make_params(population=7)
        graph = Graph(7, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 0), (0, 3)])
        table = mv_strategy_table(params)
        mech = MechanismConfig(z=1.3, z0=1.7, z1=2.1, beta0=0.9, beta1=0.9, epsilon=0.1)
        for k in range(25):
            trial = run_trial(
                substream(8, 5, k), graph, table, mech, params, _summary(0.6, 0.3)
            )
            reports = [int(x) for x in trial.reports]
            for i in range(7):
                m = majority_excluding(reports, i)
                assert trial.payments[i] == pytest.approx(
                    peer_payment(reports[i], m, mech), abs=1e-15
                )


class TestConditionalIndependence:
    def test_distant_users_uncorrelated(self):
        # path 0-1-2-3-4-5: users 0 and 5 are non-adjacent with no common friend
        params = make_params(population=6)
        graph = Graph(6, [(i, i + 1) for i in range(5)])
        table = mv_strategy_table(params)
        mech = _simple_mech()
        trials = 4000
        x0, x5 = [], []
        for k in range(trials):
            r = run_trial(substream(17, 5, k), graph, table, mech, params, _summary(0.6, 0.3))
            if r.w == 1:
                x0.append(r.reports[0])
                x5.append(r.reports[5])
        corr = np.corrcoef(x0, x5)[0, 1]
        assert abs(corr) < 3.0 / math.sqrt(len(x0))


class TestRunExperiment:
    def test_empirical_mean_matches_analytics(self):
        cfg = apply_overrides(default_config(), ["sim.trials=600", "model.population=200"])
        r = run_experiment(cfg)
        assert abs(r.empirical_mu1.value - r.analytic.graph_mu1) < 3 * r.empirical_mu1.se
        assert abs(r.empirical_majority_match.value - r.analytic.beta) < max(
            3 * r.empirical_majority_match.se, 5e-4
        )

    def test_workers_do_not_change_results(self):
        cfg = apply_overrides(default_config(), ["sim.trials=120", "model.population=100"])
        csv1 = simresult_csv(run_experiment(cfg, workers=1))
        csv4 = simresult_csv(run_experiment(cfg, workers=4))
        assert csv1 == csv4

    def test_repeat_runs_identical(self):
        cfg = apply_overrides(default_config(), ["sim.trials=80", "model.population=80"])
        assert simresult_csv(run_experiment(cfg)) == simresult_csv(run_experiment(cfg))

    def test_nd_profile_zero_privacy_cost(self):
        cfg = apply_overrides(
            default_config(), ["sim.trials=60", "model.population=80", "sim.profile=nd"]
        )
        r = run_experiment(cfg)
        assert r.avg_privacy_cost.value == 0.0

    def test_config_model_graph_end_to_end(self):
        cfg = apply_overrides(
            default_config(),
            ["graph.kind=config-model", "graph.pmf=1:0.4;2:0.4;3:0.2",
             "model.population=100", "sim.trials=200"],
        )
        r = run_experiment(cfg)
        assert abs(r.empirical_mu1.value - r.analytic.graph_mu1) < 4 * r.empirical_mu1.se
        assert r.analytic.summary.mu1 > 0.5

    def test_unequal_priors_rejected(self):
        cfg = apply_overrides(default_config(), ["model.prior_w1=0.6", "sim.trials=10"])
        with pytest.raises(NotImplementedError):
            run_experiment(cfg)


class TestNormalityProbe:
    def test_small_population_skips_threshold(self):
        cfg = apply_overrides(
            default_config(), ["model.population=50", "sim.trials=60", "graph.avg_degree=3"]
        )
        rep = normality_probe(cfg, trials=60)
        assert not rep.asymptotic
        assert rep.passed is None
        assert set(rep.ks_statistic) == {0, 1}

    def test_degenerate_strategy_rejected(self):
        cfg = apply_overrides(default_config(), ["model.population=60", "sim.trials=40"])
        always_one = ActionDistribution(p1=1.0, p0=0.0)

        def degenerate(d: int) -> DegreeStrategy:
            entries = tuple(
                StrategyEntry(
                    f=f, regime="nd", xi=0.0, rows=(always_one, always_one),
                    cut_low=0.0, cut_high=0.0,
                )
                for f in range(d + 1)
            )
            return DegreeStrategy(d=d, entries=entries)

        with pytest.raises(ZeroVarianceError):
            normality_probe(cfg, trials=40, table=StrategyTable(degenerate))


class TestSweep:
    def test_grid_structure_and_determinism(self):
        cfg = apply_overrides(default_config(), ["sim.trials=60", "model.population=80"])
        rows = sweep(cfg, "avg_degree", [1, 2, 4], trials=60)
        assert [r.value for r in rows] == [1.0, 2.0, 4.0]
        text = sweep_csv(rows)
        assert text == sweep_csv(sweep(cfg, "avg_degree", [1, 2, 4], trials=60))
        assert text.count("\n") == 4  # header + 3 rows

    def test_epsilon_axis_changes_accuracy_inputs(self):
        cfg = apply_overrides(default_config(), ["sim.trials=400", "model.population=100"])
        rows = sweep(cfg, "epsilon", [0.1, 0.5], trials=400)
        taus = [r.result.analytic.summary.tau for r in rows]
        assert taus[1] > taus[0]
        # paying for more revealing reports cannot hurt the estimator
        lo, hi = rows[0].result.accuracy, rows[1].result.accuracy
        assert hi.value >= lo.value - (lo.ci_half + hi.ci_half)
