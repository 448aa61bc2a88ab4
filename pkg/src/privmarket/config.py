"""Run configuration: a flat `section.key = value` text format.

One file drives every subcommand.  Parsing is strict (unknown keys and
missing referenced files are errors), serialization is canonical, and
parse -> serialize -> parse is the identity on configs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .graph import DegreeDistribution, Graph, generate_configuration_model, generate_erdos_renyi, ingest_edge_list
from .model import (
    TAG_GRAPH,
    CostFunction,
    ModelParams,
    audit_cost_function,
    linear_capped_cost,
    quadratic_cost,
    substream,
    table_cost,
)

__all__ = [
    "ConfigError",
    "ModelSection",
    "GraphSection",
    "MechanismSection",
    "SimSection",
    "OutputSection",
    "RunConfig",
    "default_config",
    "parse_config",
    "serialize_config",
    "apply_overrides",
    "override_axis",
    "model_params",
    "cost_from_spec",
    "build_graph",
    "analytic_distribution",
]

ER = "er"
CONFIG_MODEL = "config-model"
EDGE_LIST = "edge-list"


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class ModelSection:
    prior_w1: float = 0.5
    theta0: float = 0.7
    alpha: float = 0.25
    epsilon: float = 0.1
    cost: str = "quadratic"
    population: int = 250


@dataclass(frozen=True)
class GraphSection:
    kind: str = ER
    avg_degree: float = 4.0  # er
    pmf: str = ""  # config-model: "d:mass;d:mass"
    poisson_mean: float = 0.0  # config-model alternative
    d_max: int = -1  # strategy-export range / poisson truncation; -1 means unset
    path: str = ""  # edge-list
    symmetrize: bool = True  # edge-list


@dataclass(frozen=True)
class MechanismSection:
    payment_scale: float = 1.0  # multiplies every payment constant


@dataclass(frozen=True)
class SimSection:
    trials: int = 10000
    workers: int = 1
    seed: int = 20240101
    profile: str = "mv"  # mv | nd


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    formats: str = "csv,json"


@dataclass(frozen=True)
class SweepSection:
    axis: str = ""  # avg_degree | epsilon | alpha; empty means single run
    values: str = ""  # comma-separated grid


@dataclass(frozen=True)
class AnalyticsSection:
    p_e: float = 0.05  # error target for the payment-bound regime


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    graph: GraphSection = field(default_factory=GraphSection)
    mechanism: MechanismSection = field(default_factory=MechanismSection)
    sim: SimSection = field(default_factory=SimSection)
    output: OutputSection = field(default_factory=OutputSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    analytics: AnalyticsSection = field(default_factory=AnalyticsSection)


def default_config() -> RunConfig:
    return RunConfig()


_SECTIONS = {
    "model": ModelSection,
    "graph": GraphSection,
    "mechanism": MechanismSection,
    "sim": SimSection,
    "output": OutputSection,
    "sweep": SweepSection,
    "analytics": AnalyticsSection,
}

_BOOL_STRINGS = {"true": True, "false": False, "yes": True, "no": False, "1": True, "0": False}


def _coerce(section: str, key: str, raw: str, current):
    target = type(current)
    try:
        if target is bool:
            return _BOOL_STRINGS[raw.strip().lower()]
        if target is int:
            return int(raw)
        if target is float:
            return float(raw)
        return raw.strip()
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {target.__name__}") from exc


def _set_key(cfg: RunConfig, dotted: str, raw: str) -> RunConfig:
    if "." not in dotted:
        raise ConfigError(f"key {dotted!r} must look like section.name")
    section_name, key = dotted.split(".", 1)
    if section_name not in _SECTIONS:
        raise ConfigError(f"unknown section {section_name!r} in key {dotted!r}")
    section = getattr(cfg, section_name)
    if not hasattr(section, key):
        raise ConfigError(f"unknown key {dotted!r}")
    value = _coerce(section_name, key, raw, getattr(section, key))
    return replace(cfg, **{section_name: replace(section, **{key: value})})


def parse_config(source) -> RunConfig:
    """Parse text, a path, or an open file into a validated RunConfig."""
    if isinstance(source, (str, Path)) and "\n" not in str(source) and os.path.exists(str(source)):
        text = Path(source).read_text(encoding="utf-8")
        base_dir = Path(source).parent
    elif hasattr(source, "read"):
        text = source.read()
        base_dir = Path(".")
    else:
        text = str(source)
        base_dir = Path(".")
    cfg = default_config()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {line!r}")
        dotted, raw = stripped.split("=", 1)
        cfg = _set_key(cfg, dotted.strip(), raw.strip())
    validate_config(cfg, base_dir=base_dir)
    return cfg


def validate_config(cfg: RunConfig, base_dir: Path = Path(".")) -> None:
    if cfg.graph.kind not in (ER, CONFIG_MODEL, EDGE_LIST):
        raise ConfigError(f"graph.kind must be one of er, config-model, edge-list; got {cfg.graph.kind!r}")
    if cfg.graph.kind == CONFIG_MODEL and not cfg.graph.pmf and cfg.graph.poisson_mean <= 0:
        raise ConfigError("config-model graphs need graph.pmf or graph.poisson_mean (with graph.d_max)")
    if cfg.graph.kind == EDGE_LIST:
        if not cfg.graph.path:
            raise ConfigError("edge-list graphs need graph.path")
        if not Path(cfg.graph.path).exists():
            raise ConfigError(f"graph.path does not exist: {cfg.graph.path}")
    if cfg.sim.profile not in ("mv", "nd"):
        raise ConfigError(f"sim.profile must be mv or nd, got {cfg.sim.profile!r}")
    if cfg.sweep.axis and cfg.sweep.axis not in ("avg_degree", "epsilon", "alpha"):
        raise ConfigError(f"sweep.axis must be avg_degree, epsilon or alpha, got {cfg.sweep.axis!r}")
    try:
        cost_from_spec(cfg.model.cost)  # validates the cost spec string
        model_params(cfg)  # validates model parameter ranges
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"model: {exc}") from exc


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; stable field order, 17 significant digits."""
    lines = []
    for section_name in _SECTIONS:
        section = getattr(cfg, section_name)
        for key, value in vars(section).items():
            if isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, float):
                rendered = f"{value:.17g}"
            else:
                rendered = str(value)
            lines.append(f"{section_name}.{key} = {rendered}")
    return "\n".join(lines) + "\n"


def apply_overrides(cfg: RunConfig, assignments) -> RunConfig:
    """Apply 'section.key=value' strings; later assignments win."""
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        dotted, raw = item.split("=", 1)
        cfg = _set_key(cfg, dotted.strip(), raw.strip())
    validate_config(cfg)
    return cfg


def override_axis(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    if axis == "avg_degree":
        return replace(cfg, graph=replace(cfg.graph, avg_degree=float(value)))
    if axis == "epsilon":
        return replace(cfg, model=replace(cfg.model, epsilon=float(value)))
    if axis == "alpha":
        return replace(cfg, model=replace(cfg.model, alpha=float(value)))
    raise ConfigError(f"unknown axis {axis!r}")


def cost_from_spec(spec: str) -> CostFunction:
    """Materialize a cost function from its config string."""
    spec = spec.strip()
    if spec == "quadratic":
        return quadratic_cost()
    if spec == "linear-capped":
        return linear_capped_cost()
    if spec.startswith("table:"):
        pairs = []
        for chunk in spec[len("table:"):].split(","):
            z, _, v = chunk.partition(":")
            try:
                pairs.append((float(z), float(v)))
            except ValueError as exc:
                raise ConfigError(f"bad cost table entry {chunk!r}") from exc
        cost = table_cost([p[0] for p in pairs], [p[1] for p in pairs])
        return cost
    raise ConfigError(f"model.cost must be quadratic, linear-capped or table:..., got {spec!r}")


def model_params(cfg: RunConfig) -> ModelParams:
    cost = cost_from_spec(cfg.model.cost)
    audit_cost_function(cost)
    return ModelParams(
        prior_w1=cfg.model.prior_w1,
        theta0=cfg.model.theta0,
        alpha=cfg.model.alpha,
        cost=cost,
        epsilon=cfg.model.epsilon,
        population=cfg.model.population,
    )


def _pmf_distribution(cfg: GraphSection) -> DegreeDistribution:
    if cfg.pmf:
        support, mass = [], []
        for chunk in cfg.pmf.split(";"):
            d, _, m = chunk.partition(":")
            try:
                support.append(int(d))
                mass.append(float(m))
            except ValueError as exc:
                raise ConfigError(f"bad graph.pmf entry {chunk!r}") from exc
        return DegreeDistribution(support, mass)
    if cfg.poisson_mean > 0:
        d_max = cfg.d_max if cfg.d_max > 0 else max(20, int(cfg.poisson_mean * 4))
        return DegreeDistribution.poisson_truncated(cfg.poisson_mean, d_max)
    raise ConfigError("config-model graphs need graph.pmf or graph.poisson_mean")


def analytic_distribution(cfg: RunConfig, graph: Graph | None = None) -> DegreeDistribution:
    """Degree law used by the closed forms for this configuration."""
    if cfg.graph.kind == ER:
        n = cfg.model.population
        return DegreeDistribution.binomial(n - 1, cfg.graph.avg_degree / (n - 1))
    if cfg.graph.kind == CONFIG_MODEL:
        return _pmf_distribution(cfg.graph)
    if graph is None:
        graph, _ = build_graph(cfg, 0)
    return DegreeDistribution.from_graph(graph)


def build_graph(cfg: RunConfig, stream_index: int = 0) -> tuple[Graph, DegreeDistribution]:
    """Realize the configured graph plus the matching analytic degree law."""
    rng = substream(cfg.sim.seed, TAG_GRAPH, stream_index)
    if cfg.graph.kind == ER:
        graph = generate_erdos_renyi(rng, cfg.model.population, cfg.graph.avg_degree)
        dist = DegreeDistribution.binomial(
            cfg.model.population - 1, cfg.graph.avg_degree / (cfg.model.population - 1)
        )
    elif cfg.graph.kind == CONFIG_MODEL:
        dist = _pmf_distribution(cfg.graph)
        graph = generate_configuration_model(rng, dist, cfg.model.population)
    else:
        result = ingest_edge_list(cfg.graph.path, symmetrize=cfg.graph.symmetrize)
        graph = result.graph
        dist = DegreeDistribution.from_graph(graph)
    return graph, dist
