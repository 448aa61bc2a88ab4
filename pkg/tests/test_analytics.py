from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privmarket.analytics import (
    AnalyticsError,
    beta_accuracy,
    beta_from_moments,
    bhattacharyya,
    bhattacharyya_from,
    binom_pmf,
    binom_range,
    expected_total_payment,
    graph_report_moments,
    lambda_sr,
    mv_moments_equal_priors,
    mv_report_law,
    nd_moments,
    nd_report_law,
    nu_values,
    payment_bound,
    std_normal_cdf,
)
from privmarket.graph import DegreeDistribution, Graph
from privmarket.strategy import build_mv_strategy, nd_baseline_strategy

from conftest import make_params
from oracles import (
    binom_pmf_naive,
    enumerate_mu1,
    enumerate_pair_adjacent,
    enumerate_pair_common_friend,
    gaussian_bhattacharyya_quadrature,
    normal_cdf_quadrature,
)


class TestBinomials:
    def test_simple_values(self):
        assert binom_pmf(1, 2, 0.5) == pytest.approx(0.5, abs=1e-15)
        assert binom_pmf(-1, 5, 0.3) == 0.0
        assert binom_pmf(2.5, 5, 0.3) == 0.0  # off the integer lattice

    def test_matches_naive_product(self):
        for k in range(11):
            assert binom_pmf(k, 10, 0.6) == pytest.approx(
                binom_pmf_naive(k, 10, 0.6), abs=1e-12
            )

    def test_large_m_stable(self):
        total = binom_range(0, 10_000, 10_000, 0.37)
        assert total == pytest.approx(1.0, abs=1e-9)
        assert binom_pmf(3700, 10_000, 0.37) > 0.0

    def test_range_examples(self):
        assert binom_range(0, 7, 7, 0.3) == pytest.approx(1.0, abs=1e-12)
        assert binom_range(1.2, 2.8, 4, 0.6) == pytest.approx(0.3456, abs=1e-12)
        assert binom_range(3, 2, 9, 0.5) == 0.0

    @given(
        m=st.integers(0, 40),
        p=st.floats(0.01, 0.99),
        k=st.floats(-2, 40),
        l=st.floats(-2, 40),
        shift=st.floats(0.0, 5.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_range_monotone(self, m, p, k, l, shift):
        base = binom_range(k, l, m, p)
        assert 0.0 <= base <= 1.0 + 1e-12
        assert binom_range(k, l + shift, m, p) >= base - 1e-12  # monotone in l
        assert binom_range(k + shift, l, m, p) <= base + 1e-12  # anti-monotone in k


class TestNuValues:
    def test_tie_only_band(self):
        nu_sr, _ = nu_values(4, 0.0, 0.6)
        assert nu_sr == pytest.approx(binom_pmf(2, 4, 0.6), abs=1e-15)

    def test_degree_two_tail(self):
        _, nu_nd = nu_values(2, 0.0, 0.6)
        assert nu_nd == pytest.approx(0.36, abs=1e-12)

    def test_disjoint_masses(self):
        for d in range(0, 9):
            for tau in (0.0, 0.1, 0.6, 1.3):
                nu_sr, nu_nd = nu_values(d, tau, 0.6)
                assert nu_sr + nu_nd <= 1.0 + 1e-12


class TestMvMoments:
    def test_no_learning_reduces_to_single_responder(self):
        params = make_params(epsilon=0.1)
        dist = DegreeDistribution.point_mass(0)
        s = mv_moments_equal_priors(params, dist)
        lam = lambda_sr(0.1, 0.7)
        assert s.mu1 == pytest.approx(lam, abs=1e-15)
        assert s.kappa1 == pytest.approx(lam - lam * lam, abs=1e-15)
        assert s.delta == 0.0 and s.delta_tilde == 0.0

    def test_point_mass_two_matches_enumeration(self):
        params = make_params(alpha=0.0, epsilon=0.1)
        dist = DegreeDistribution.point_mass(2)
        s = mv_moments_equal_priors(params, dist)
        oracle = enumerate_mu1(build_mv_strategy(2, params), params)
        assert s.mu1 == pytest.approx(oracle, abs=1e-12)

    def test_mu_exceeds_half_and_kappas_match(self):
        params = make_params(epsilon=0.5)
        dist = DegreeDistribution.poisson_truncated(4.0, 16)
        s = mv_moments_equal_priors(params, dist)
        assert s.mu1 > 0.5
        assert s.kappa0 == s.kappa1
        assert s.kappa0_pairs == s.kappa1_pairs
        assert s.mu0 == pytest.approx(1.0 - s.mu1, abs=1e-15)

    def test_mu_matches_enumeration_all_degrees(self, default_params):
        for d in range(0, 7):
            dist = DegreeDistribution.point_mass(d)
            s = mv_moments_equal_priors(default_params, dist)
            oracle = enumerate_mu1(build_mv_strategy(d, default_params), default_params)
            assert abs(s.mu1 - oracle) < 1e-10, d

    def test_pair_probs_match_enumeration(self, default_params):
        law = mv_report_law(default_params)
        for di, dj in ((1, 1), (2, 2), (2, 3), (4, 2)):
            si = build_mv_strategy(di, default_params)
            sj = build_mv_strategy(dj, default_params)
            assert law.pair_adjacent(di, dj) == pytest.approx(
                enumerate_pair_adjacent(si, sj, default_params), abs=1e-10
            )
            assert law.pair_common_friend(di, dj) == pytest.approx(
                enumerate_pair_common_friend(si, sj, default_params), abs=1e-10
            )

    def test_delta_tilde_identity(self):
        # delta_tilde equals the population/positive-degree mean-square gap
        params = make_params(epsilon=0.3)
        dist = DegreeDistribution([0, 2, 5], [0.3, 0.4, 0.3])
        s = mv_moments_equal_priors(params, dist)
        law = mv_report_law(params)
        mu_pos = law.ensemble_mean(dist.rho_tilde())
        assert s.delta_tilde == pytest.approx(mu_pos**2 - s.mu1**2, abs=1e-12)


class TestNdMoments:
    def test_all_degree_two(self):
        params = make_params()  # theta1 = 0.6
        s = nd_moments(params, DegreeDistribution.point_mass(2))
        assert s.mu1 == pytest.approx(0.36 + 0.5 * 0.48, abs=1e-12)
        assert s.delta_tilde == 0.0  # rho0 = 0
        assert s.mu0 == pytest.approx(1.0 - s.mu1, abs=1e-15)

    def test_matches_enumeration(self, default_params):
        for d in range(0, 7):
            s = nd_moments(default_params, DegreeDistribution.point_mass(d))
            oracle = enumerate_mu1(nd_baseline_strategy(d), default_params)
            assert abs(s.mu1 - oracle) < 1e-10, d

    def test_pair_probs_match_enumeration(self, default_params):
        law = nd_report_law(default_params)
        for di, dj in ((2, 2), (3, 2)):
            si, sj = nd_baseline_strategy(di), nd_baseline_strategy(dj)
            assert law.pair_adjacent(di, dj) == pytest.approx(
                enumerate_pair_adjacent(si, sj, default_params), abs=1e-10
            )
            assert law.pair_common_friend(di, dj) == pytest.approx(
                enumerate_pair_common_friend(si, sj, default_params), abs=1e-10
            )

    def test_delta_tilde_identity_with_isolated_users(self):
        params = make_params()
        dist = DegreeDistribution([0, 2], [0.25, 0.75])
        s = nd_moments(params, dist)
        law = nd_report_law(params)
        mu_pos = law.ensemble_mean(dist.rho_tilde())
        assert s.delta_tilde == pytest.approx(mu_pos**2 - s.mu1**2, abs=1e-12)
        # coin flip for isolated users
        assert s.lam == 0.5


class TestStdNormalCdf:
    def test_center_and_symmetry(self):
        assert std_normal_cdf(0.0) == 0.5
        for x in np.linspace(-4, 4, 17):
            assert std_normal_cdf(x) + std_normal_cdf(-x) == pytest.approx(1.0, abs=1e-14)

    def test_quantile_value(self):
        assert std_normal_cdf(1.96) == pytest.approx(0.9750021048517795, abs=1e-4)

    def test_matches_quadrature(self):
        for x in (-3.0, -1.0, 0.3, 2.5):
            assert std_normal_cdf(x) == pytest.approx(normal_cdf_quadrature(x), abs=1e-12)


class TestBetaAccuracy:
    def test_uninformative_mean_gives_half(self):
        for n in (2, 100, 10_000):
            assert beta_from_moments(n, 0.5, 0.3) == 0.5

    def test_increasing_in_population(self):
        params = make_params()
        dist = DegreeDistribution.poisson_truncated(4.0, 16)
        s = mv_moments_equal_priors(params, dist)
        values = [beta_accuracy(n, s) for n in (10, 100, 1000, 10_000)]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] > 0.999

    def test_zero_variance_rejected(self):
        with pytest.raises(AnalyticsError):
            beta_from_moments(100, 0.6, 0.0)


class TestExpectedPayment:
    def test_perfect_majority(self):
        assert expected_total_payment(2.0, 1.0, 0.7, 50) == pytest.approx(2.0 * 0.7 * 50)

    def test_hand_value(self):
        assert expected_total_payment(2.0, 0.9, 0.8, 100) == pytest.approx(220.0)

    def test_degenerate_beta(self):
        with pytest.raises(AnalyticsError):
            expected_total_payment(2.0, 0.5, 0.8, 100)


class TestBhattacharyya:
    def test_indistinguishable_is_zero(self):
        assert bhattacharyya_from(100, 0.5, 0.5, 0.2, 0.2) == 0.0

    def test_linear_in_population(self):
        b1 = bhattacharyya_from(100, 0.6, 0.4, 0.3, 0.3)
        b2 = bhattacharyya_from(200, 0.6, 0.4, 0.3, 0.3)
        assert b2 == pytest.approx(2.0 * b1, rel=1e-12)

    def test_matches_gaussian_quadrature(self):
        n, mu1, mu0, kap = 250, 0.65, 0.35, 0.4
        ours = bhattacharyya_from(n, mu1, mu0, kap, kap)
        oracle = gaussian_bhattacharyya_quadrature(n * mu1, n * kap, n * mu0, n * kap)
        assert ours == pytest.approx(oracle, rel=1e-6)

    def test_zero_variance_rejected(self):
        with pytest.raises(AnalyticsError):
            bhattacharyya_from(10, 0.6, 0.4, 0.0, 0.0)

    def test_equilibrium_at_least_baseline(self):
        dist = DegreeDistribution.poisson_truncated(4.0, 16)
        for eps in (0.1, 0.3, 0.5):
            params = make_params(epsilon=eps)
            b_mv = bhattacharyya(250, mv_moments_equal_priors(params, dist))
            b_nd = bhattacharyya(250, nd_moments(params, dist))
            assert b_mv >= b_nd - 1e-12


class TestPaymentBound:
    DIST = DegreeDistribution.poisson_truncated(4.0, 16)

    def test_loose_target_is_slack(self, default_params):
        rep = payment_bound(0.5, default_params, self.DIST, 250)
        assert rep.regime == "slack"
        assert rep.delta_floor
        assert rep.bound_per_user is None

    def test_boundary_included_in_slack(self, default_params):
        b_nd = bhattacharyya(250, nd_moments(default_params, self.DIST))
        rep = payment_bound(math.exp(-b_nd), default_params, self.DIST, 250)
        assert rep.regime == "slack"

    def test_tight_target_bounds_by_equilibrium_payment(self, default_params):
        from privmarket.mechanism import design_Z, design_Z0_Z1

        b_nd = bhattacharyya(250, nd_moments(default_params, self.DIST))
        rep = payment_bound(math.exp(-b_nd) / 10.0, default_params, self.DIST, 250)
        assert rep.regime == "tight"
        mv = mv_moments_equal_priors(default_params, self.DIST)
        beta = beta_accuracy(250, mv)
        z = design_Z(0.1, 0.7, default_params.cost)
        z0, _ = design_Z0_Z1(z, beta, beta, 0.5)
        assert rep.bound_per_user == pytest.approx(
            expected_total_payment(z0, beta, mv.mu1, 250) / 250, rel=1e-12
        )


class TestGraphMoments:
    def test_cycle_variance_from_pairwise_terms(self, default_params):
        # 6-cycle: all degree 2; adjacent pairs have no common friend and
        # second neighbors share exactly one; no other dependent pairs.
        g = Graph(6, [(i, (i + 1) % 6) for i in range(6)])
        law = mv_report_law(default_params)
        mu, kappa = graph_report_moments(g, law)
        m = law.mean(2)
        vs = law.pair_adjacent(2, 2)
        vst = law.pair_common_friend(2, 2)
        expected = m * (1 - m) + 2 * (vs - m * m) + 2 * (vst - m * m)
        assert mu == pytest.approx(m, abs=1e-15)
        assert kappa == pytest.approx(expected, abs=1e-12)

    def test_triangle_skips_wedge_terms(self, default_params):
        g = Graph(3, [(0, 1), (1, 2), (0, 2)])
        law = mv_report_law(default_params)
        m = law.mean(2)
        vs = law.pair_adjacent(2, 2)
        _, kappa = graph_report_moments(g, law)
        assert kappa == pytest.approx(m * (1 - m) + 2 * (vs - m * m), abs=1e-12)
