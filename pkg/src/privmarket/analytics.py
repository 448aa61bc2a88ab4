"""Closed-form statistics of the reported-data sum.

Two strategy profiles are covered, both symmetric and analyzed under equal
priors: the equilibrium majority-voting profile (band half-width tau solved
from the model, randomized-response level epsilon inside the band) and the
all-non-disclosive baseline (tau = 0, epsilon = 0, i.e. a fair coin at
ties).  `ReportLaw` captures one such profile and exposes the per-degree
conditional report probabilities that everything else is assembled from.

Two variance coefficients are reported side by side:

* `kappa1` / `kappa0` follow the displayed closed form, whose cross-pair
  term `delta` is a first-order approximation of the pairwise covariances;
* `kappa1_pairs` / `kappa0_pairs` assemble the dependency-graph CLT
  variance from the exact pairwise report probabilities (`pair_adjacent`,
  `pair_common_friend`), which match brute-force enumeration and are the
  right normalizer for Monte Carlo comparisons.

All degree expectations are exact finite sums over the truncated support;
nothing in this module samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtr

from .graph import DegreeDistribution, Graph
from .mechanism import design_Z, design_Z0_Z1
from .model import ModelParams
from .strategy import equal_priors_tau

__all__ = [
    "AnalyticsError",
    "MomentSummary",
    "PaymentBoundReport",
    "ReportLaw",
    "binom_pmf",
    "binom_range",
    "nu_values",
    "lambda_sr",
    "mv_report_law",
    "nd_report_law",
    "mv_moments_equal_priors",
    "nd_moments",
    "graph_report_moments",
    "std_normal_cdf",
    "beta_accuracy",
    "beta_from_moments",
    "expected_total_payment",
    "bhattacharyya",
    "bhattacharyya_from",
    "payment_bound",
]


class AnalyticsError(ValueError):
    """Degenerate inputs to a closed-form computation."""


_INT_TOL = 1e-9


def binom_pmf(k: float, m: int, p: float) -> float:
    """Binomial(m, p) mass at k; zero off the integer lattice or out of range.

    Evaluated through log-gamma so that m up to 1e4 stays finite.
    """
    if m < 0:
        raise AnalyticsError("m must be >= 0")
    kr = round(k)
    if abs(k - kr) > _INT_TOL or kr < 0 or kr > m:
        return 0.0
    k = int(kr)
    if p <= 0.0:
        return 1.0 if k == 0 else 0.0
    if p >= 1.0:
        return 1.0 if k == m else 0.0
    log_pmf = (
        gammaln(m + 1)
        - gammaln(k + 1)
        - gammaln(m - k + 1)
        + k * math.log(p)
        + (m - k) * math.log1p(-p)
    )
    return float(np.exp(log_pmf))


def binom_range(k: float, l: float, m: int, p: float) -> float:
    """Sum of the Binomial(m, p) mass over integers in [k, l]; 0 when empty."""
    if m < 0:
        raise AnalyticsError("m must be >= 0")
    lo = max(math.ceil(k - _INT_TOL), 0)
    hi = min(math.floor(l + _INT_TOL), m)
    if lo > hi:
        return 0.0
    ks = np.arange(lo, hi + 1)
    if p <= 0.0:
        return 1.0 if lo == 0 else 0.0
    if p >= 1.0:
        return 1.0 if hi == m else 0.0
    log_pmf = (
        gammaln(m + 1)
        - gammaln(ks + 1)
        - gammaln(m - ks + 1)
        + ks * math.log(p)
        + (m - ks) * math.log1p(-p)
    )
    return float(np.exp(log_pmf).sum())


def nu_values(d: int, tau: float, theta1: float) -> tuple[float, float]:
    """(band mass, upper-tail mass) of the group-signal sum at quality theta1.

    A band wider than the whole range (tau > d/2) is legitimate for low
    degrees and simply yields band mass 1.
    """
    if d < 0:
        raise AnalyticsError("d must be >= 0")
    if tau < 0.0:
        raise AnalyticsError(f"tau must be >= 0, got {tau}")
    nu_sr = binom_range(d / 2 - tau, d / 2 + tau, d, theta1)
    nu_nd = binom_range(math.floor(d / 2 + tau + 1), d, d, theta1)
    return nu_sr, nu_nd


def lambda_sr(epsilon: float, theta0: float) -> float:
    """Report-1 probability of a randomized responder given W = 1."""
    ee = math.exp(epsilon)
    return (theta0 * ee + 1.0 - theta0) / (ee + 1.0)


class ReportLaw:
    """Conditional report law of one symmetric profile, given W = 1.

    Under equal priors the W = 0 law is the mirror image, so a single
    conditional covers both hypotheses.  Per-degree quantities are cached.
    """

    def __init__(self, params: ModelParams, tau: float, epsilon: float):
        self.params = params
        self.tau = float(tau)
        self.epsilon = float(epsilon)
        self.lam = lambda_sr(epsilon, params.theta0)
        self._mean: dict[int, float] = {}
        self._j: dict[tuple[int, int, int], float] = {}
        self._adj: dict[tuple[int, int], float] = {}
        self._wedge: dict[tuple[int, int], float] = {}

    # -- single-user -----------------------------------------------------
    def nu(self, d: int) -> tuple[float, float]:
        return nu_values(d, self.tau, self.params.theta1)

    def mean(self, d: int) -> float:
        """Pr(X = 1 | W = 1, degree d)."""
        if d not in self._mean:
            nu_sr, nu_nd = self.nu(d)
            self._mean[d] = nu_nd + self.lam * nu_sr
        return self._mean[d]

    def ensemble_mean(self, dist: DegreeDistribution) -> float:
        return dist.expect(self.mean)

    # -- pairwise --------------------------------------------------------
    def _j_value(self, d: int, k: int, l: int) -> float:
        """Pr(X = 1 | W = 1, degree d, own signal k, one received bit fixed to l)."""
        key = (d, k, l)
        if key not in self._j:
            th1 = self.params.theta1
            tail = binom_range(math.floor(d / 2 + self.tau + 1 - l), d - 1, d - 1, th1)
            band = binom_range(d / 2 - self.tau - l, d / 2 + self.tau - l, d - 1, th1)
            c_k = math.exp(self.epsilon) if k == 1 else 1.0
            c_k /= math.exp(self.epsilon) + 1.0
            self._j[key] = tail + c_k * band
        return self._j[key]

    def _m_value(self, d: int, s: int, t: int) -> float:
        """Pr(X = 1 | W = 1, degree d, own signal s, friend's signal t)."""
        alpha = self.params.alpha
        return (1.0 - alpha) * self._j_value(d, s, t) + alpha * self._j_value(d, s, 1 - t)

    def mean_given_friend_signal(self, d: int, t: int) -> float:
        th0 = self.params.theta0
        return th0 * self._m_value(d, 1, t) + (1.0 - th0) * self._m_value(d, 0, t)

    def pair_adjacent(self, di: int, dj: int) -> float:
        """Pr(X_i = X_j = 1 | W = 1) for friends i, j with no common friend."""
        key = (min(di, dj), max(di, dj))
        if key not in self._adj:
            th0 = self.params.theta0
            pr = {1: th0, 0: 1.0 - th0}
            self._adj[key] = sum(
                pr[si] * pr[sj] * self._m_value(key[0], si, sj) * self._m_value(key[1], sj, si)
                for si in (0, 1)
                for sj in (0, 1)
            )
        return self._adj[key]

    def pair_common_friend(self, di: int, dj: int) -> float:
        """Pr(X_i = X_j = 1 | W = 1) for non-friends sharing exactly one friend."""
        key = (min(di, dj), max(di, dj))
        if key not in self._wedge:
            th0 = self.params.theta0
            pr = {1: th0, 0: 1.0 - th0}
            self._wedge[key] = sum(
                pr[t]
                * self.mean_given_friend_signal(key[0], t)
                * self.mean_given_friend_signal(key[1], t)
                for t in (0, 1)
            )
        return self._wedge[key]

    def ensemble_pair_probs(self, dist: DegreeDistribution) -> tuple[float, float]:
        """Degree-averaged (adjacent, common-friend) pair probabilities.

        Both endpoints are weighted by the degree law conditioned on D > 0,
        matching the closed-form treatment of linked users.
        """
        rt = dist.rho_tilde()
        supp = [int(d) for d, m in zip(rt.support, rt.mass) if m > 0]
        mass = {int(d): m for d, m in zip(rt.support, rt.mass) if m > 0}
        vs = sum(
            mass[a] * mass[b] * self.pair_adjacent(a, b) for a in supp for b in supp
        )
        vst = sum(
            mass[a] * mass[b] * self.pair_common_friend(a, b) for a in supp for b in supp
        )
        return vs, vst


def mv_report_law(params: ModelParams) -> ReportLaw:
    """Report law of the equilibrium majority-voting profile (equal priors)."""
    return ReportLaw(params, tau=equal_priors_tau(params), epsilon=params.epsilon)


def nd_report_law(params: ModelParams) -> ReportLaw:
    """Report law of the all-non-disclosive baseline (majority, coin at ties)."""
    return ReportLaw(params, tau=0.0, epsilon=0.0)


@dataclass(frozen=True)
class MomentSummary:
    """Conditional report moments of a symmetric profile under equal priors."""

    mu1: float
    mu0: float
    kappa1: float
    kappa0: float
    lam: float
    delta: float
    delta_tilde: float
    kappa1_pairs: float
    kappa0_pairs: float
    tau: float
    epsilon: float


def _delta_display(law: ReportLaw, rho_tilde: DegreeDistribution) -> float:
    """First-order cross-pair coefficient: the two boundary pmf terms."""
    params = law.params
    th0, th1, alpha = params.theta0, params.theta1, params.alpha
    eps, tau = law.epsilon, law.tau
    ee = math.exp(eps)
    coef_hi = ee * (1.0 - th0) + th0
    coef_lo = th0 * ee + 1.0 - th0

    def boundary_term(d: int) -> float:
        hi = binom_pmf(math.floor(d / 2 + tau), d - 1, th1)
        lo = binom_pmf(math.ceil(d / 2 - tau - 1), d - 1, th1)
        return (coef_hi * hi + coef_lo * lo) / (ee + 1.0)

    return th0 * (1.0 - th0) * (1.0 - 2.0 * alpha) * rho_tilde.expect(boundary_term)


def _summary_from_law(law: ReportLaw, dist: DegreeDistribution) -> MomentSummary:
    params = law.params
    if not params.equal_priors:
        raise AnalyticsError("closed-form moments require equal priors")
    lam = law.lam
    rho0 = dist.rho0
    if rho0 >= 1.0:
        # No social learning at all: i.i.d. randomized responses.
        var = lam - lam * lam
        return MomentSummary(
            mu1=lam, mu0=1.0 - lam, kappa1=var, kappa0=var, lam=lam,
            delta=0.0, delta_tilde=0.0, kappa1_pairs=var, kappa0_pairs=var,
            tau=law.tau, epsilon=law.epsilon,
        )
    mu1 = law.ensemble_mean(dist)
    mean_d = dist.mean()
    mean_d2 = dist.second_moment()
    rho_tilde = dist.rho_tilde()
    delta_tilde = (
        rho0 / (1.0 - rho0) ** 2 * (mu1 * mu1 * (2.0 - rho0) - 2.0 * mu1 * lam + rho0 * lam * lam)
    )
    delta = _delta_display(law, rho_tilde)
    kappa1 = mu1 - mu1 * mu1 + delta_tilde * mean_d2 + delta * (mean_d2 - mean_d)
    vs, vst = law.ensemble_pair_probs(dist)
    kappa1_pairs = mu1 - mu1 * mu1 + mean_d * (vs - vst) + mean_d2 * (vst - mu1 * mu1)
    return MomentSummary(
        mu1=mu1, mu0=1.0 - mu1, kappa1=kappa1, kappa0=kappa1, lam=lam,
        delta=delta, delta_tilde=delta_tilde,
        kappa1_pairs=kappa1_pairs, kappa0_pairs=kappa1_pairs,
        tau=law.tau, epsilon=law.epsilon,
    )


def mv_moments_equal_priors(params: ModelParams, dist: DegreeDistribution) -> MomentSummary:
    """Moments of the equilibrium profile: mean from the band masses, both kappas."""
    return _summary_from_law(mv_report_law(params), dist)


def nd_moments(params: ModelParams, dist: DegreeDistribution) -> MomentSummary:
    """Moments of the all-non-disclosive baseline (tau = 0, coin at ties)."""
    return _summary_from_law(nd_report_law(params), dist)


def graph_report_moments(graph: Graph, law: ReportLaw) -> tuple[float, float]:
    """(mean report probability, variance coefficient) on a realized graph.

    The variance of the report sum is assembled exactly from the graph:
    per-node variances, one covariance per edge, and one covariance per
    wedge (neighbor pair of a common friend) that is not itself an edge.
    Pairs sharing several friends contribute one term per shared friend,
    and triangle pairs keep only their edge term; both patterns are rare
    in sparse graphs.
    """
    deg = graph.degrees
    means = np.array([law.mean(int(d)) for d in deg])
    var_sum = float(np.sum(means * (1.0 - means)))
    for u, v in graph.edges():
        cov = law.pair_adjacent(int(deg[u]), int(deg[v])) - means[u] * means[v]
        var_sum += 2.0 * cov
    for center in range(graph.n):
        nbrs = graph.neighbors(center)
        for x in range(len(nbrs)):
            for y in range(x + 1, len(nbrs)):
                a, b = int(nbrs[x]), int(nbrs[y])
                if graph.has_edge(a, b):
                    continue
                cov = law.pair_common_friend(int(deg[a]), int(deg[b])) - means[a] * means[b]
                var_sum += 2.0 * cov
    return float(means.mean()), var_sum / graph.n


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF (erf-based, accurate to double precision)."""
    return float(ndtr(x))


def beta_from_moments(n: int, mu1: float, kappa1: float) -> float:
    """Probability that the others' majority matches the true state."""
    if n < 2:
        raise AnalyticsError("need n >= 2")
    if kappa1 <= 0.0:
        raise AnalyticsError(f"variance coefficient must be positive, got {kappa1}")
    return std_normal_cdf(math.sqrt((n - 1) / kappa1) * (mu1 - 0.5))


def beta_accuracy(n: int, summary: MomentSummary, exact_pairs: bool = False) -> float:
    """Majority-consistency probability from an equal-priors moment summary."""
    kappa = summary.kappa1_pairs if exact_pairs else summary.kappa1
    return beta_from_moments(n, summary.mu1, kappa)


def expected_total_payment(z: float, beta: float, mu1: float, n: int) -> float:
    """Total expected payout of the peer mechanism at the equilibrium profile."""
    if beta <= 0.5:
        raise AnalyticsError(f"beta must exceed 1/2, got {beta}")
    return z * (1.0 - beta + mu1 / (2.0 * beta - 1.0)) * n


def bhattacharyya_from(n: int, mu1: float, mu0: float, kappa1: float, kappa0: float) -> float:
    """Gaussian-approximation Bhattacharyya distance of the two sum hypotheses."""
    if kappa1 + kappa0 <= 0.0:
        raise AnalyticsError("zero variance: Bhattacharyya distance undefined")
    return n / 4.0 * (mu1 - mu0) ** 2 / (kappa1 + kappa0)


def bhattacharyya(n: int, summary: MomentSummary, exact_pairs: bool = False) -> float:
    if exact_pairs:
        return bhattacharyya_from(
            n, summary.mu1, summary.mu0, summary.kappa1_pairs, summary.kappa0_pairs
        )
    return bhattacharyya_from(n, summary.mu1, summary.mu0, summary.kappa1, summary.kappa0)


SLACK = "slack"
TIGHT = "tight"


@dataclass(frozen=True)
class PaymentBoundReport:
    regime: str  # SLACK or TIGHT
    nd_bhattacharyya: float
    mv_bhattacharyya: float
    bound_per_user: float | None  # populated in the tight regime
    delta_floor: bool  # slack: total payment delta*N for any delta > 0


def payment_bound(
    p_e: float, params: ModelParams, dist: DegreeDistribution, n: int
) -> PaymentBoundReport:
    """Classify the payment regime for an error-probability target.

    A target at or above exp(-B(baseline)) is achievable at arbitrarily
    small total payment by the zero-privacy-cost baseline; a tighter target
    is coverable at the equilibrium profile's per-user expected payment.
    """
    if not 0.0 < p_e < 1.0:
        raise AnalyticsError("p_e must lie in (0, 1)")
    nd = nd_moments(params, dist)
    mv = mv_moments_equal_priors(params, dist)
    b_nd = bhattacharyya(n, nd)
    b_mv = bhattacharyya(n, mv)
    if p_e >= math.exp(-b_nd):
        return PaymentBoundReport(
            regime=SLACK, nd_bhattacharyya=b_nd, mv_bhattacharyya=b_mv,
            bound_per_user=None, delta_floor=True,
        )
    beta = beta_accuracy(n, mv)
    z = design_Z(params.epsilon, params.theta0, params.cost)
    z0, _ = design_Z0_Z1(z, beta, beta, params.prior_w1)
    bound = expected_total_payment(z0, beta, mv.mu1, n) / n
    return PaymentBoundReport(
        regime=TIGHT, nd_bhattacharyya=b_nd, mv_bhattacharyya=b_mv,
        bound_per_user=bound, delta_floor=False,
    )
