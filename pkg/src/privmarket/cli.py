"""Command-line front end.

Subcommands: strategy, analytics, simulate, ingest-check.  Every command is
pure with respect to (config, seed): outputs are written atomically and
partial files are removed on failure.  Set PRIVMARKET_LOG to control
verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import analytics as an
from . import sim as simmod
from .config import (
    ConfigError,
    RunConfig,
    analytic_distribution,
    apply_overrides,
    build_graph,
    model_params,
    parse_config,
)
from .graph import check_sparsity, ingest_edge_list
from .mechanism import design_Z, design_Z0_Z1
from .strategy import mv_strategy_table, table_to_text

log = logging.getLogger("privmarket")


def _setup_logging() -> None:
    level = os.environ.get("PRIVMARKET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config)
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"sim.seed={args.seed}")
    if args.trials is not None:
        overrides.append(f"sim.trials={args.trials}")
    if args.workers is not None:
        overrides.append(f"sim.workers={args.workers}")
    if args.out is not None:
        overrides.append(f"output.directory={args.out}")
    return apply_overrides(cfg, overrides)


class _AtomicOutputs:
    """Write files to temp names, publish on success, clean up on failure."""

    def __init__(self, directory: str):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._pending: list[tuple[Path, Path]] = []

    def write(self, name: str, content: str) -> Path:
        final = self.dir / name
        tmp = self.dir / (name + ".tmp")
        tmp.write_text(content, encoding="utf-8")
        self._pending.append((tmp, final))
        return final

    def publish(self) -> list[Path]:
        done = []
        for tmp, final in self._pending:
            os.replace(tmp, final)
            done.append(final)
        self._pending.clear()
        return done

    def discard(self) -> None:
        for tmp, _ in self._pending:
            tmp.unlink(missing_ok=True)
        self._pending.clear()


def _strategy_d_max(cfg: RunConfig) -> int:
    if cfg.graph.d_max >= 0:
        return cfg.graph.d_max
    if cfg.graph.kind == "config-model":
        return analytic_distribution(cfg).d_max
    if cfg.graph.kind == "edge-list":
        graph, _ = build_graph(cfg, 0)
        return graph.max_degree()
    return 20  # er default export range


def cmd_strategy(cfg: RunConfig, out: _AtomicOutputs) -> None:
    params = model_params(cfg)
    d_max = _strategy_d_max(cfg)
    table = mv_strategy_table(params, d_max=d_max)
    path = out.write("strategy.tsv", table_to_text(table))
    log.info("strategy table for degrees 0..%d -> %s", d_max, path)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def cmd_analytics(cfg: RunConfig, out: _AtomicOutputs) -> None:
    params = model_params(cfg)
    dist = analytic_distribution(cfg)
    n = params.population
    lines = []
    if params.equal_priors:
        mv = an.mv_moments_equal_priors(params, dist)
        nd = an.nd_moments(params, dist)
        beta = an.beta_accuracy(n, mv)
        beta_pairs = an.beta_accuracy(n, mv, exact_pairs=True)
        z = design_Z(params.epsilon, params.theta0, params.cost)
        z0, z1 = design_Z0_Z1(z, beta, beta, params.prior_w1)
        bound = an.payment_bound(cfg.analytics.p_e, params, dist, n)
        pairs = [
            ("mu1", mv.mu1), ("mu0", mv.mu0),
            ("kappa1", mv.kappa1), ("kappa0", mv.kappa0),
            ("kappa1_pairs", mv.kappa1_pairs),
            ("tau", mv.tau), ("lambda", mv.lam),
            ("delta", mv.delta), ("delta_tilde", mv.delta_tilde),
            ("beta", beta), ("beta_pairs", beta_pairs),
            ("Z", z), ("Z0", z0), ("Z1", z1),
            ("expected_total_payment", an.expected_total_payment(z0, beta, mv.mu1, n)),
            ("expected_payment_per_user", an.expected_total_payment(z0, beta, mv.mu1, n) / n),
            ("bhattacharyya_mv", an.bhattacharyya(n, mv)),
            ("bhattacharyya_nd", an.bhattacharyya(n, nd)),
            ("nd_mu1", nd.mu1), ("nd_kappa1", nd.kappa1),
            ("payment_bound_p_e", cfg.analytics.p_e),
            ("payment_bound_regime", bound.regime),
        ]
        if bound.bound_per_user is not None:
            pairs.append(("payment_bound_per_user", bound.bound_per_user))
    else:
        # No closed form for the majority accuracy under unequal priors:
        # emit only the quantities that remain defined.
        z = design_Z(params.epsilon, params.theta0, params.cost)
        pairs = [
            ("Z", z),
            ("note", "unequal priors: beta, moments and payment omitted (no closed form)"),
        ]
    rendered = "\n".join(
        f"{k} = {_fmt(v) if isinstance(v, float) else v}" for k, v in pairs
    )
    path = out.write("analytics.txt", rendered + "\n")
    log.info("analytic report -> %s", path)


def cmd_simulate(cfg: RunConfig, out: _AtomicOutputs) -> None:
    trials, workers = cfg.sim.trials, cfg.sim.workers
    if cfg.sweep.axis:
        values = [float(v) for v in cfg.sweep.values.split(",") if v.strip()]
        if not values:
            raise ConfigError("sweep.values must list at least one grid point")
        rows = simmod.sweep(cfg, cfg.sweep.axis, values, trials=trials, workers=workers)
        csv_text = simmod.sweep_csv(rows)
        extra = {"sweep_axis": cfg.sweep.axis, "sweep_values": values}
    else:
        result = simmod.run_experiment(cfg, trials=trials, workers=workers,
                                       axis_value=cfg.graph.avg_degree)
        csv_text = simmod.simresult_csv(result)
        extra = {"nodes": cfg.model.population}
    if cfg.graph.kind == "edge-list":
        graph, _ = build_graph(cfg, 0)
        extra["nodes"] = graph.n
        extra["edges"] = graph.num_edges
    out.write("results.csv", csv_text)
    out.write("manifest.json", simmod.run_manifest(cfg, trials, workers, extra=extra))
    log.info("simulation outputs -> %s", out.dir)


def cmd_ingest_check(cfg: RunConfig, out: _AtomicOutputs) -> None:
    if cfg.graph.kind != "edge-list":
        raise ConfigError("ingest-check needs graph.kind = edge-list")
    result = ingest_edge_list(cfg.graph.path, symmetrize=cfg.graph.symmetrize)
    report = check_sparsity(result.graph)
    lines = [
        f"nodes = {result.graph.n}",
        f"edges = {result.graph.num_edges}",
        f"self_loops_dropped = {result.self_loops_dropped}",
        f"duplicates_dropped = {result.duplicates_dropped}",
        f"lines_read = {result.lines_read}",
        f"d_max = {report.d_max}",
        f"n_quarter_root = {_fmt(report.n_quarter_root)}",
        f"ratio = {_fmt(report.ratio)}",
        f"moment_2_5 = {_fmt(report.moment_2_5)}",
        f"flagged = {'true' if report.flagged else 'false'}",
    ]
    path = out.write("ingest.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    log.info("ingest report -> %s", path)


_COMMANDS = {
    "strategy": cmd_strategy,
    "analytics": cmd_analytics,
    "simulate": cmd_simulate,
    "ingest-check": cmd_ingest_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privmarket",
        description="Privacy-preserving data-collection market: strategies, analytics, simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the run configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable; flags win)")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _AtomicOutputs(cfg.output.directory)
    try:
        _COMMANDS[args.command](cfg, out)
        out.publish()
    except Exception as exc:  # publish nothing on failure
        out.discard()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
