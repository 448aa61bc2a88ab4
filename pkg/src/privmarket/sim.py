"""Monte Carlo engine.

A trial realizes the world state, signals and group signals on a fixed
graph, applies a per-degree strategy table, pays every user through the
peer mechanism, and runs the collector's quadratic Gaussian detector on
the report sum.  Trials are indexed; each owns the stream
(master seed, trial tag, index), so results are byte-identical across
runs and across worker counts, and aggregation over the trial-indexed
arrays uses exactly-rounded summation.
"""

from __future__ import annotations

import json
import math
import multiprocessing
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import analytics
from .analytics import MomentSummary, graph_report_moments
from .graph import Graph
from .mechanism import MechanismConfig, design_Z, design_Z0_Z1
from .model import TAG_TRIAL, ModelParams, substream
from .strategy import SR, StrategyTable, mv_strategy_table, nd_baseline_table

__all__ = [
    "TrialResult",
    "Estimate",
    "AnalyticBlock",
    "SimResult",
    "NormalityReport",
    "SweepRow",
    "ZeroVarianceError",
    "map_estimate",
    "run_trial",
    "run_experiment",
    "normality_probe",
    "sweep",
    "simresult_csv",
    "sweep_csv",
    "run_manifest",
    "CSV_HEADER",
]

MV_PROFILE = "mv"
ND_PROFILE = "nd"


class ZeroVarianceError(RuntimeError):
    """The report sum is degenerate; normality cannot be probed."""


def map_estimate(sum_reports: float, n: int, summary, prior_w1: float) -> int:
    """Collector's Gaussian MAP estimate of the world bit from the report sum.

    Exact ties in the quadratic comparison decide 0.  Under equal priors
    with equal variance coefficients this reduces to thresholding the sum
    at n/2.
    """
    m = sum_reports / n
    lhs = (summary.mu0 - m) ** 2 / summary.kappa0 - (summary.mu1 - m) ** 2 / summary.kappa1
    rhs = (2.0 / n) * math.log(
        math.sqrt(summary.kappa1 / summary.kappa0) * (1.0 - prior_w1) / prior_w1
    )
    return 1 if lhs > rhs else 0


@dataclass(frozen=True)
class TrialResult:
    w: int
    w_hat: int
    reports: np.ndarray
    payments: np.ndarray
    privacy_costs: np.ndarray
    sum_reports: int


class _Engine:
    """Flattened per-node lookup tables for vectorized trial simulation."""

    def __init__(
        self,
        graph: Graph,
        table: StrategyTable,
        mech: MechanismConfig,
        params: ModelParams,
        map_moments,
    ):
        self.graph = graph
        self.params = params
        self.mech = mech
        self.map_moments = map_moments
        degrees = sorted(set(int(d) for d in graph.degrees))
        offsets: dict[int, int] = {}
        p1_parts: list[np.ndarray] = []
        cost_parts: list[np.ndarray] = []
        pos = 0
        for d in degrees:
            strat = table.degree(d)
            block = np.empty((d + 1, 2))
            cost_block = np.empty(d + 1)
            for entry in strat.entries:
                block[entry.f, 0] = entry.row(0).p1
                block[entry.f, 1] = entry.row(1).p1
                level = entry.xi if entry.regime == SR else 0.0
                cost_block[entry.f] = params.cost.value(level)
            offsets[d] = pos
            p1_parts.append(block.reshape(-1))
            cost_parts.append(cost_block)
            pos += (d + 1) * 2
        self._p1 = np.concatenate(p1_parts)
        self._cost = np.concatenate(cost_parts)
        self._node_p1_base = np.array([offsets[int(d)] for d in graph.degrees], dtype=np.int64)
        cost_offsets: dict[int, int] = {}
        pos = 0
        for d in degrees:
            cost_offsets[d] = pos
            pos += d + 1
        self._node_cost_base = np.array(
            [cost_offsets[int(d)] for d in graph.degrees], dtype=np.int64
        )

    def simulate(self, rng: np.random.Generator, force_w: int | None = None) -> TrialResult:
        graph, params = self.graph, self.params
        n = graph.n
        w = int(rng.random() < params.prior_w1)
        if force_w is not None:
            w = int(force_w)
        match = rng.random(n) < params.theta0
        s = np.where(match, w, 1 - w).astype(np.int8)
        sent = s[graph.directed_send]
        flips = rng.random(len(sent)) < params.alpha
        c = np.where(flips, 1 - sent, sent)
        f = np.bincount(graph.directed_recv, weights=c, minlength=n).astype(np.int64)
        p1 = self._p1[self._node_p1_base + 2 * f + s]
        reports = (rng.random(n) < p1).astype(np.int64)
        total = int(reports.sum())
        # All users participate under these profiles, so n_participants = n.
        threshold = (n - 1) // 2 + 1
        majority_others = (total - reports) >= threshold
        payments = np.where(
            reports == 1,
            self.mech.z1 * majority_others,
            self.mech.z0 * (1 - majority_others),
        ).astype(float)
        privacy_costs = self._cost[self._node_cost_base + f]
        w_hat = map_estimate(total, n, self.map_moments, params.prior_w1)
        return TrialResult(
            w=w, w_hat=w_hat, reports=reports, payments=payments,
            privacy_costs=privacy_costs, sum_reports=total,
        )

    def trial_stats(self, master_seed: int, index: int) -> tuple:
        rng = substream(master_seed, TAG_TRIAL, index)
        t = self.simulate(rng)
        n = self.graph.n
        threshold = (n - 1) // 2 + 1
        majority_others = (t.sum_reports - t.reports) >= threshold
        match_rate = float(np.mean(majority_others == t.w))
        return (
            t.w,
            int(t.w_hat == t.w),
            math.fsum(t.payments) / n,
            math.fsum(t.privacy_costs) / n,
            t.sum_reports,
            match_rate,
        )


def run_trial(
    rng: np.random.Generator,
    graph: Graph,
    table: StrategyTable,
    cfg: MechanismConfig,
    params: ModelParams,
    summary,
) -> TrialResult:
    """Simulate one market round; degree coverage errors surface from the table."""
    if graph.n != params.population:
        raise ValueError("graph size does not match params.population")
    engine = _Engine(graph, table, cfg, params, summary)
    return engine.simulate(rng)


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float

    @property
    def ci_half(self) -> float:
        return 1.96 * self.se


@dataclass(frozen=True)
class AnalyticBlock:
    summary: MomentSummary  # from the configured degree distribution
    graph_mu1: float  # realized-graph mean report probability
    graph_kappa: float  # realized-graph variance coefficient (exact pairs)
    beta: float
    z: float
    z0: float
    z1: float
    expected_payment_per_user: float
    bhattacharyya_mv: float  # graph-based, for the profile actually simulated
    bhattacharyya_nd: float  # distribution-based, all-non-disclosive baseline


@dataclass(frozen=True)
class SimResult:
    trials: int
    profile: str
    axis_value: float
    accuracy: Estimate
    avg_payment_per_user: Estimate
    avg_privacy_cost: Estimate
    empirical_mu1: Estimate
    empirical_kappa1: Estimate
    empirical_majority_match: Estimate
    analytic: AnalyticBlock


_POOL_ENGINE = None


def _pool_init(engine, master_seed):
    global _POOL_ENGINE
    _POOL_ENGINE = (engine, master_seed)


def _pool_task(index):
    engine, master_seed = _POOL_ENGINE
    return index, engine.trial_stats(master_seed, index)


def _mean_se(values: Sequence[float]) -> Estimate:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return Estimate(mean, float("nan"))
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return Estimate(mean, math.sqrt(var / n))


def _run_trials(engine: _Engine, master_seed: int, trials: int, workers: int) -> list[tuple]:
    if workers <= 1:
        return [engine.trial_stats(master_seed, i) for i in range(trials)]
    results: list[tuple | None] = [None] * trials
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(workers, initializer=_pool_init, initargs=(engine, master_seed)) as pool:
        for index, stats in pool.imap_unordered(_pool_task, range(trials), chunksize=64):
            results[index] = stats
    return results  # type: ignore[return-value]


def _build_experiment(config, graph_stream_index: int = 0):
    """Graph, analytic distribution, law, tables and mechanism from a RunConfig."""
    from .config import build_graph, model_params  # local import to avoid a cycle

    params = model_params(config)
    graph, dist = build_graph(config, graph_stream_index)
    if graph.n != params.population:
        params = ModelParams(
            prior_w1=params.prior_w1, theta0=params.theta0, alpha=params.alpha,
            cost=params.cost, epsilon=params.epsilon, population=graph.n,
        )
    if not params.equal_priors:
        raise NotImplementedError(
            "experiments need equal priors: the majority-accuracy closed form "
            "(and hence the payment constants) has no general-priors form"
        )
    profile = config.sim.profile
    if profile == ND_PROFILE:
        table: StrategyTable = nd_baseline_table()
        law = analytics.nd_report_law(params)
        summary = analytics.nd_moments(params, dist)
    else:
        table = mv_strategy_table(params)
        law = analytics.mv_report_law(params)
        summary = analytics.mv_moments_equal_priors(params, dist)
    graph_mu, graph_kappa = graph_report_moments(graph, law)
    beta = analytics.beta_from_moments(graph.n, graph_mu, graph_kappa)
    z = design_Z(params.epsilon, params.theta0, params.cost)
    z0, z1 = design_Z0_Z1(z, beta, beta, params.prior_w1)
    scale = config.mechanism.payment_scale
    mech = MechanismConfig(
        z=z * scale, z0=z0 * scale, z1=z1 * scale,
        beta0=beta, beta1=beta, epsilon=params.epsilon,
    )
    map_moments = MomentSummary(
        mu1=graph_mu, mu0=1.0 - graph_mu, kappa1=graph_kappa, kappa0=graph_kappa,
        lam=summary.lam, delta=summary.delta, delta_tilde=summary.delta_tilde,
        kappa1_pairs=graph_kappa, kappa0_pairs=graph_kappa,
        tau=summary.tau, epsilon=summary.epsilon,
    )
    engine = _Engine(graph, table, mech, params, map_moments)
    analytic = AnalyticBlock(
        summary=summary, graph_mu1=graph_mu, graph_kappa=graph_kappa, beta=beta,
        z=mech.z, z0=mech.z0, z1=mech.z1,
        expected_payment_per_user=analytics.expected_total_payment(
            mech.z0, beta, graph_mu, graph.n
        )
        / graph.n,
        bhattacharyya_mv=analytics.bhattacharyya_from(
            graph.n, graph_mu, 1.0 - graph_mu, graph_kappa, graph_kappa
        ),
        bhattacharyya_nd=analytics.bhattacharyya(graph.n, analytics.nd_moments(params, dist)),
    )
    return params, graph, engine, analytic


def run_experiment(
    config, trials: int | None = None, workers: int | None = None,
    axis_value: float = float("nan"), graph_stream_index: int = 0,
) -> SimResult:
    """Run the configured experiment and attach analytic predictions.

    The graph is drawn once from its own stream; trials on it are
    parallelizable and order-independent.
    """
    trials = config.sim.trials if trials is None else int(trials)
    workers = config.sim.workers if workers is None else int(workers)
    if trials < 2:
        raise ValueError("need at least 2 trials")
    params, graph, engine, analytic = _build_experiment(config, graph_stream_index)
    stats = _run_trials(engine, config.sim.seed, trials, workers)

    accuracy = _mean_se([s[1] for s in stats])
    payment = _mean_se([s[2] for s in stats])
    privacy = _mean_se([s[3] for s in stats])
    match = _mean_se([s[5] for s in stats])
    sums_w1 = [s[4] for s in stats if s[0] == 1]
    n = graph.n
    if len(sums_w1) >= 2:
        mu1_est = _mean_se([v / n for v in sums_w1])
        mean_sum = math.fsum(sums_w1) / len(sums_w1)
        var_sum = math.fsum((v - mean_sum) ** 2 for v in sums_w1) / (len(sums_w1) - 1)
        kappa1_est = Estimate(var_sum / n, var_sum / n * math.sqrt(2.0 / (len(sums_w1) - 1)))
    else:
        mu1_est = Estimate(float("nan"), float("nan"))
        kappa1_est = Estimate(float("nan"), float("nan"))

    return SimResult(
        trials=trials,
        profile=config.sim.profile,
        axis_value=axis_value,
        accuracy=accuracy,
        avg_payment_per_user=payment,
        avg_privacy_cost=privacy,
        empirical_mu1=mu1_est,
        empirical_kappa1=kappa1_est,
        empirical_majority_match=match,
        analytic=analytic,
    )


@dataclass(frozen=True)
class NormalityReport:
    n: int
    trials_per_state: int
    ks_statistic: dict[int, float]
    mu_used: float
    kappa_used: float
    asymptotic: bool  # large-population claim applies
    threshold: float
    passed: bool | None  # None when the asymptotic claim is not made


def normality_probe(
    config, trials: int, table: StrategyTable | None = None, threshold: float = 0.05,
    asymptotic_min_n: int = 500,
) -> NormalityReport:
    """Kolmogorov-Smirnov distance of the normalized report sum per world state.

    The sum is normalized by the realized-graph mean and exact-pair variance
    coefficient.  A custom strategy table falls back to empirical
    normalization and exists mainly to surface degenerate profiles, which
    raise ZeroVarianceError.
    """
    from scipy.stats import kstest

    params, graph, engine, analytic = _build_experiment(config)
    if table is not None:
        engine = _Engine(graph, table, engine.mech, params, engine.map_moments)
    per_state = trials // 2
    if per_state < 10:
        raise ValueError("need at least 20 trials")
    mu, kappa = analytic.graph_mu1, analytic.graph_kappa
    ks: dict[int, float] = {}
    for w in (0, 1):
        sums = np.empty(per_state)
        for i in range(per_state):
            rng = substream(config.sim.seed, TAG_TRIAL, w * per_state + i)
            sums[i] = engine.simulate(rng, force_w=w).sum_reports
        if sums.max() - sums.min() == 0.0:
            raise ZeroVarianceError("report sum is constant; degenerate strategy profile")
        if table is None:
            mean_w = mu * graph.n if w == 1 else (1.0 - mu) * graph.n
            scale = math.sqrt(graph.n * kappa)
        else:
            mean_w = float(sums.mean())
            scale = float(sums.std(ddof=1))
            if scale == 0.0:
                raise ZeroVarianceError("report sum is constant; degenerate strategy profile")
        ks[w] = float(kstest((sums - mean_w) / scale, "norm").statistic)
    asymptotic = graph.n >= asymptotic_min_n
    passed = (max(ks.values()) < threshold) if asymptotic else None
    return NormalityReport(
        n=graph.n, trials_per_state=per_state, ks_statistic=ks,
        mu_used=mu, kappa_used=kappa, asymptotic=asymptotic,
        threshold=threshold, passed=passed,
    )


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    result: SimResult


def sweep(config, axis: str, values: Sequence[float], trials: int | None = None,
          workers: int | None = None) -> list[SweepRow]:
    """One experiment per grid value; deterministic given the master seed."""
    from .config import override_axis

    if axis not in ("avg_degree", "epsilon", "alpha"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    rows = []
    for idx, value in enumerate(values):
        sub = override_axis(config, axis, value)
        result = run_experiment(
            sub, trials=trials, workers=workers, axis_value=float(value),
            graph_stream_index=idx,
        )
        rows.append(SweepRow(axis=axis, value=float(value), result=result))
    return rows


CSV_HEADER = (
    "axis_value,accuracy,accuracy_ci,avg_payment,payment_ci,avg_privacy_cost,cost_ci,"
    "analytic_mu1,analytic_beta,analytic_payment,bhattacharyya"
)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _result_row(r: SimResult) -> str:
    a = r.analytic
    cells = [
        r.axis_value,
        r.accuracy.value, r.accuracy.ci_half,
        r.avg_payment_per_user.value, r.avg_payment_per_user.ci_half,
        r.avg_privacy_cost.value, r.avg_privacy_cost.ci_half,
        a.graph_mu1, a.beta, a.expected_payment_per_user, a.bhattacharyya_mv,
    ]
    return ",".join(_fmt(c) for c in cells)


def simresult_csv(result: SimResult) -> str:
    return CSV_HEADER + "\n" + _result_row(result) + "\n"


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    return CSV_HEADER + "\n" + "\n".join(_result_row(r.result) for r in rows) + "\n"


def run_manifest(config, trials: int, workers: int, extra: dict | None = None) -> str:
    """JSON record of the run: full config text, seed and code version."""
    from . import __version__
    from .config import serialize_config

    payload = {
        "config": serialize_config(config),
        "seed": config.sim.seed,
        "trials": trials,
        "workers": workers,
        "version": __version__,
    }
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
