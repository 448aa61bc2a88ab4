"""Equilibrium data-reporting strategies.

A user with d friends observes her private signal s and the sum f of her d
noisy group signals.  Her equilibrium action is non-disclosive (report a
fixed bit regardless of s) when f is far enough from d/2, and a symmetric
randomized response on s at privacy level xi(f) in the middle band.  The
band edges come from the clamped quantities Upsilon_0 / Upsilon_1 evaluated
at the solved level xi(f); xi(f) itself is the root of the concave
first-order condition J'(eta) = 0.

Numerical notes: the group-signal likelihood ratio (theta1/(1-theta1))^(d-2f)
is carried in log space throughout, so degrees near the sparsity cap do not
overflow.  J' is strictly decreasing for convex costs, so bisection on an
expanding bracket is guaranteed to converge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CostFunctionError, ModelParams

__all__ = [
    "ActionDistribution",
    "StrategyEntry",
    "DegreeStrategy",
    "StrategyTable",
    "StrategyDomainError",
    "privacy_level",
    "bar_A",
    "ml_estimate",
    "solve_xi",
    "upsilon",
    "equal_priors_tau",
    "build_mv_strategy",
    "nd_baseline_strategy",
    "mv_strategy_table",
    "nd_baseline_table",
    "table_to_text",
]

XI_TOLERANCE = 1e-10
XI_CEILING = 1e6

ND = "nd"
SR = "sr"


class StrategyDomainError(ValueError):
    """A strategy computation left its admissible domain (bad cost function)."""


@dataclass(frozen=True)
class ActionDistribution:
    """Distribution over reports {1, 0, non-participation}."""

    p1: float
    p0: float
    p_bot: float = 0.0

    def __post_init__(self) -> None:
        for name, p in (("p1", self.p1), ("p0", self.p0), ("p_bot", self.p_bot)):
            if not -1e-12 <= p <= 1.0 + 1e-12:
                raise ValueError(f"{name} = {p} is not a probability")
        if abs(self.p1 + self.p0 + self.p_bot - 1.0) > 1e-12:
            raise ValueError("action probabilities must sum to 1")


def privacy_level(row_s1: ActionDistribution, row_s0: ActionDistribution) -> float:
    """Worst-case |log-likelihood ratio| of any report event under s=1 vs s=0.

    Maximizes over all nonempty event subsets of {1, 0, bot}; 0/0 counts as
    ratio 1, and a one-sided zero yields +inf.
    """
    a = (row_s1.p1, row_s1.p0, row_s1.p_bot)
    b = (row_s0.p1, row_s0.p0, row_s0.p_bot)
    worst = 0.0
    for mask in range(1, 7):  # proper nonempty subsets; the full set has ratio 1
        pa = sum(p for k, p in enumerate(a) if mask >> k & 1)
        pb = sum(p for k, p in enumerate(b) if mask >> k & 1)
        if pa <= 0.0 and pb <= 0.0:
            continue
        if pa <= 0.0 or pb <= 0.0:
            return math.inf
        worst = max(worst, abs(math.log(pa / pb)))
    return worst


def bar_A(theta0: float, theta1: float) -> float:
    """Half-width of the private-signal tiebreak region of the ML rule."""
    return 0.5 * math.log(theta0 / (1.0 - theta0)) / math.log(theta1 / (1.0 - theta1))


def ml_estimate(s: int, f: int, d: int, a_bar: float) -> int:
    """Maximum-likelihood local estimate of the world bit."""
    if f > d / 2 + a_bar:
        return 1
    if f < d / 2 - a_bar:
        return 0
    return int(s)


def _log_ratio_power(d: int, f: int, theta1: float) -> float:
    """log of (theta1/(1-theta1))^(d-2f)."""
    return (d - 2 * f) * math.log(theta1 / (1.0 - theta1))


def _j_prime(eta: float, f: int, d: int, params: ModelParams) -> float:
    """Derivative of the symmetric-randomization utility in the privacy level."""
    eps = params.epsilon
    gp_eps = params.cost.derivative(eps)
    if gp_eps <= 0.0:
        return -params.cost.derivative(eta)
    t = _log_ratio_power(d, f, params.theta1)
    p1, p0 = params.prior_w1, 1.0 - params.prior_w1
    log_c = (
        math.log(gp_eps / 2.0)
        + np.logaddexp(0.0, t)
        - np.logaddexp(math.log(p1), math.log(p0) + t)
    )
    log_term = (eta - eps) + 2.0 * (np.logaddexp(0.0, eps) - np.logaddexp(0.0, eta)) + log_c
    return float(np.exp(log_term)) - params.cost.derivative(eta)


def solve_xi(f: int, d: int, params: ModelParams) -> float:
    """Optimal SR privacy level: the root of J'(eta) = 0, or 0 if J'(0) <= 0.

    J' is strictly decreasing (J is concave for convex costs), so an
    expanding bracket plus bisection converges; failure to bracket within
    the ceiling signals an invalid cost function.
    """
    if not 0 <= f <= d:
        raise ValueError(f"need 0 <= f <= d, got f={f}, d={d}")
    if _j_prime(0.0, f, d, params) <= 0.0:
        return 0.0
    lo, hi = 0.0, params.epsilon + 1.0
    while _j_prime(hi, f, d, params) > 0.0:
        hi *= 2.0
        if hi > XI_CEILING:
            raise CostFunctionError(
                "J' never becomes negative: the cost derivative fails to grow"
            )
    while hi - lo > XI_TOLERANCE:
        mid = 0.5 * (lo + hi)
        if _j_prime(mid, f, d, params) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _b_value(eta: float, params: ModelParams) -> float:
    """Scaled cost term entering the band-edge computation: g(eta)(e^eta+1)/Z."""
    g_eta = params.cost.value(eta)
    if g_eta == 0.0:
        return 0.0
    gp_eps = params.cost.derivative(params.epsilon)
    if gp_eps <= 0.0:
        raise CostFunctionError("g'(epsilon) = 0 with g(eta) > 0: degenerate design scalar")
    eps = params.epsilon
    return (
        (2.0 * params.theta0 - 1.0)
        * 2.0
        * math.exp(eps)
        * (g_eta / gp_eps)
        * (math.exp(eta) + 1.0)
        / (math.exp(eps) + 1.0) ** 2
    )


def upsilon(side: int, eta: float, f: int, d: int, params: ModelParams) -> float:
    """Band half-width on the given side (0: low-f cut, 1: high-f cut).

    Computes the raw cut A_side(eta) and clamps it to [0, bar_A].  The prior
    weight with a minus sign sits on the opposite world state of the side
    under evaluation, which makes the two sides coincide under equal priors.
    """
    if side not in (0, 1):
        raise ValueError("side must be 0 or 1")
    if eta < 0.0:
        raise ValueError("eta must be >= 0")
    th0, th1 = params.theta0, params.theta1
    b = _b_value(eta, params)
    p = {1: params.prior_w1, 0: 1.0 - params.prior_w1}
    num = math.exp(eta) * th0 + 1.0 - th0 - p[1 - side] * b
    den = math.exp(eta) * (1.0 - th0) + th0 + p[side] * b
    if den <= 0.0:
        raise StrategyDomainError(
            f"band-edge logarithm domain violated (den={den}); "
            "the cost function drives the scaled cost term negative"
        )
    if num <= 0.0:
        # Randomization loses to the fixed report everywhere on this side:
        # the raw cut diverges to -inf, so the clamp takes over.
        return 0.0
    a = math.log(num / den) / (2.0 * math.log(th1 / (1.0 - th1)))
    return min(max(a, 0.0), bar_A(th0, th1))


def equal_priors_tau(params: ModelParams) -> float:
    """Closed-form symmetric band half-width when both world states are equally likely."""
    if not params.equal_priors:
        raise ValueError("closed-form tau requires equal priors")
    eps, th0, th1 = params.epsilon, params.theta0, params.theta1
    if eps == 0.0:
        return 0.0
    gp = params.cost.derivative(eps)
    if gp <= 0.0:
        return 0.0
    ratio = params.cost.value(eps) / gp
    ee = math.exp(eps)
    num = ee * (ee * th0 + 1.0 - (2.0 * th0 - 1.0) * ratio) + 1.0 - th0
    den = ee * (ee * (1.0 - th0) + 1.0 + (2.0 * th0 - 1.0) * ratio) + th0
    a = math.log(num / den) / (2.0 * math.log(th1 / (1.0 - th1)))
    return min(max(a, 0.0), bar_A(th0, th1))


@dataclass(frozen=True)
class StrategyEntry:
    """Action rows for one (degree, group-signal sum) cell."""

    f: int
    regime: str  # ND or SR
    xi: float  # SR privacy level (meaningful when regime == SR, else the solved value)
    rows: tuple[ActionDistribution, ActionDistribution]  # indexed by s in {0, 1}
    cut_low: float  # d/2 - Upsilon_0(xi)
    cut_high: float  # d/2 + Upsilon_1(xi)

    def row(self, s: int) -> ActionDistribution:
        return self.rows[int(s)]

    @property
    def privacy(self) -> float:
        return privacy_level(self.rows[1], self.rows[0])


@dataclass(frozen=True)
class DegreeStrategy:
    d: int
    entries: tuple[StrategyEntry, ...]

    def entry(self, f: int) -> StrategyEntry:
        return self.entries[f]


def _sr_rows(xi: float) -> tuple[ActionDistribution, ActionDistribution]:
    hi = math.exp(xi) / (1.0 + math.exp(xi))
    return (
        ActionDistribution(p1=1.0 - hi, p0=hi),  # s = 0
        ActionDistribution(p1=hi, p0=1.0 - hi),  # s = 1
    )


def _nd_rows(report_one_prob: float) -> tuple[ActionDistribution, ActionDistribution]:
    row = ActionDistribution(p1=report_one_prob, p0=1.0 - report_one_prob)
    return (row, row)


def build_mv_strategy(d: int, params: ModelParams) -> DegreeStrategy:
    """Equilibrium majority-voting strategy entries for one degree.

    Per f: solve the SR level xi(f), evaluate both clamped cuts at xi(f),
    then classify the cell.  A friendless user always randomizes at xi(0);
    boundary hits (f exactly at a cut) resolve to the non-disclosive side.
    """
    if d < 0:
        raise ValueError("degree must be >= 0")
    entries = []
    for f in range(d + 1):
        xi = solve_xi(f, d, params)
        u0 = upsilon(0, xi, f, d, params)
        u1 = upsilon(1, xi, f, d, params)
        cut_low = d / 2 - u0
        cut_high = d / 2 + u1
        if d == 0:
            regime, rows = SR, _sr_rows(xi)
        elif f <= cut_low:
            regime, rows = ND, _nd_rows(0.0)
        elif f >= cut_high:
            regime, rows = ND, _nd_rows(1.0)
        else:
            regime, rows = SR, _sr_rows(xi)
        entries.append(
            StrategyEntry(f=f, regime=regime, xi=xi, rows=rows, cut_low=cut_low, cut_high=cut_high)
        )
    return DegreeStrategy(d=d, entries=tuple(entries))


def nd_baseline_strategy(d: int) -> DegreeStrategy:
    """All-non-disclosive baseline: report the group-signal majority, coin at ties."""
    if d < 0:
        raise ValueError("degree must be >= 0")
    entries = []
    for f in range(d + 1):
        if f * 2 > d:
            rows = _nd_rows(1.0)
        elif f * 2 < d:
            rows = _nd_rows(0.0)
        else:
            rows = _nd_rows(0.5)
        entries.append(
            StrategyEntry(f=f, regime=ND, xi=0.0, rows=rows, cut_low=d / 2, cut_high=d / 2)
        )
    return DegreeStrategy(d=d, entries=tuple(entries))


class StrategyTable:
    """Per-degree strategy cache built from a degree -> DegreeStrategy factory.

    With `extend_on_demand=False` the table is frozen at construction and
    looking up an uncovered degree raises, so simulations fail loudly when a
    graph contains degrees the table was not built for.
    """

    def __init__(self, builder, d_max: int | None = None, extend_on_demand: bool = True):
        self._builder = builder
        self._extend = extend_on_demand
        self._cache: dict[int, DegreeStrategy] = {}
        if d_max is not None:
            for d in range(d_max + 1):
                self._cache[d] = builder(d)

    def degree(self, d: int) -> DegreeStrategy:
        if d not in self._cache:
            if not self._extend:
                raise KeyError(f"degree {d} exceeds the table's coverage")
            self._cache[d] = self._builder(d)
        return self._cache[d]

    def covered_degrees(self) -> list[int]:
        return sorted(self._cache)


def mv_strategy_table(
    params: ModelParams, d_max: int | None = None, extend_on_demand: bool = True
) -> StrategyTable:
    return StrategyTable(
        lambda d: build_mv_strategy(d, params), d_max=d_max, extend_on_demand=extend_on_demand
    )


def nd_baseline_table(d_max: int | None = None, extend_on_demand: bool = True) -> StrategyTable:
    return StrategyTable(nd_baseline_strategy, d_max=d_max, extend_on_demand=extend_on_demand)


def table_to_text(table: StrategyTable) -> str:
    """Flat tab-separated export: degree, f, s, p1, p0, p_bot, regime, xi."""
    lines = ["degree\tf\ts\tp1\tp0\tp_bot\tregime\txi"]
    for d in table.covered_degrees():
        strat = table.degree(d)
        for entry in strat.entries:
            for s in (0, 1):
                row = entry.row(s)
                lines.append(
                    f"{d}\t{entry.f}\t{s}\t{row.p1:.17g}\t{row.p0:.17g}\t{row.p_bot:.17g}"
                    f"\t{entry.regime}\t{entry.xi:.17g}"
                )
    return "\n".join(lines) + "\n"
