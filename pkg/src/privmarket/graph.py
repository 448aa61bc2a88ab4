"""Social learning graph: generation, ingestion and degree statistics.

Graphs are simple and undirected, stored as sorted neighbor lists plus a
flattened directed-edge view (each undirected edge appears once per
direction, grouped by receiver) that the samplers consume directly.
Instances are immutable by convention and safe to share across workers.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

__all__ = [
    "Graph",
    "DegreeDistribution",
    "DegreeMoments",
    "SparsityReport",
    "IngestResult",
    "GraphFormatError",
    "PairingError",
    "generate_configuration_model",
    "generate_erdos_renyi",
    "ingest_edge_list",
    "check_sparsity",
    "degree_moments",
]


class GraphFormatError(ValueError):
    """Malformed or empty edge-list input."""


class PairingError(RuntimeError):
    """Configuration-model stub pairing failed within the attempt budget."""


class Graph:
    """Simple undirected graph on nodes 0..n-1."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 1:
            raise ValueError("graph needs at least one node")
        self.n = int(n)
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            pairs.add((min(u, v), max(u, v)))
        self._edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self._edges:
            adj[u].append(v)
            adj[v].append(u)
        self._adj = [np.array(sorted(a), dtype=np.int64) for a in adj]
        self.degrees = np.array([len(a) for a in self._adj], dtype=np.int64)
        # Directed view, grouped by receiver with senders ascending.
        recv = np.repeat(np.arange(self.n), self.degrees)
        send = np.concatenate(self._adj) if self.n else np.empty(0, dtype=np.int64)
        self.directed_recv = recv
        self.directed_send = send.astype(np.int64)
        self.recv_starts = np.concatenate([[0], np.cumsum(self.degrees)]).astype(np.int64)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def edges(self) -> np.ndarray:
        """Array of undirected edges (u < v), sorted."""
        return self._edges

    def neighbors(self, i: int) -> np.ndarray:
        return self._adj[i]

    def has_edge(self, u: int, v: int) -> bool:
        a = self._adj[u]
        pos = int(np.searchsorted(a, v))
        return pos < len(a) and a[pos] == v

    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self._edges.shape == other._edges.shape
            and bool(np.all(self._edges == other._edges))
        )

    def write_edge_list(self, sink: IO[str]) -> None:
        """Emit in the ingestible text format: '# ...' comments then 'u v' lines."""
        sink.write(f"# Nodes: {self.n} Edges: {self.num_edges}\n")
        for u, v in self._edges:
            sink.write(f"{u} {v}\n")

    def to_edge_list_text(self) -> str:
        buf = io.StringIO()
        self.write_edge_list(buf)
        return buf.getvalue()


class DegreeDistribution:
    """Finite-support degree law rho_d with exact moment accessors."""

    def __init__(self, support: Sequence[int], mass: Sequence[float]):
        support = np.asarray(support, dtype=np.int64)
        mass = np.asarray(mass, dtype=float)
        if support.ndim != 1 or support.shape != mass.shape or len(support) == 0:
            raise ValueError("support and mass must be equal-length 1-d sequences")
        if np.any(support < 0):
            raise ValueError("degrees must be nonnegative")
        if len(np.unique(support)) != len(support):
            raise ValueError("duplicate degrees in support")
        if np.any(mass < 0):
            raise ValueError("mass values must be nonnegative")
        if abs(mass.sum() - 1.0) > 1e-12:
            raise ValueError(f"mass sums to {mass.sum()!r}, not 1")
        order = np.argsort(support)
        self.support = support[order]
        self.mass = mass[order]

    @property
    def d_max(self) -> int:
        nz = self.support[self.mass > 0]
        return int(nz.max()) if len(nz) else 0

    @property
    def rho0(self) -> float:
        idx = np.flatnonzero(self.support == 0)
        return float(self.mass[idx[0]]) if len(idx) else 0.0

    def pmf(self, d: int) -> float:
        idx = np.flatnonzero(self.support == d)
        return float(self.mass[idx[0]]) if len(idx) else 0.0

    def mean(self) -> float:
        return float(np.dot(self.support, self.mass))

    def second_moment(self) -> float:
        return float(np.dot(self.support.astype(float) ** 2, self.mass))

    def rho_tilde(self) -> "DegreeDistribution":
        """Conditional law given D > 0; undefined when rho0 = 1."""
        if self.rho0 >= 1.0:
            raise ValueError("rho_tilde is undefined: all mass is at degree 0")
        keep = self.support > 0
        return DegreeDistribution(self.support[keep], self.mass[keep] / (1.0 - self.rho0))

    def expect(self, fn) -> float:
        """Exact finite sum of fn(d) over the support."""
        return float(sum(m * fn(int(d)) for d, m in zip(self.support, self.mass) if m > 0))

    @classmethod
    def point_mass(cls, d: int) -> "DegreeDistribution":
        return cls([d], [1.0])

    @classmethod
    def uniform(cls, degrees: Sequence[int]) -> "DegreeDistribution":
        degrees = list(degrees)
        return cls(degrees, [1.0 / len(degrees)] * len(degrees))

    @classmethod
    def poisson_truncated(cls, mean: float, d_max: int) -> "DegreeDistribution":
        from scipy.stats import poisson

        support = np.arange(d_max + 1)
        mass = poisson.pmf(support, mean)
        return cls(support, mass / mass.sum())

    @classmethod
    def binomial(cls, n_trials: int, p: float) -> "DegreeDistribution":
        from scipy.stats import binom

        support = np.arange(n_trials + 1)
        return cls(support, binom.pmf(support, n_trials, p))

    @classmethod
    def from_graph(cls, graph: Graph) -> "DegreeDistribution":
        counts = np.bincount(graph.degrees)
        return cls(np.arange(len(counts)), counts / graph.n)


def generate_configuration_model(
    rng: np.random.Generator, dist: DegreeDistribution, n: int, max_attempts: int = 1000
) -> Graph:
    """Configuration-model draw with i.i.d. degrees from `dist`.

    Stubs are paired uniformly at random; a pairing containing a self-loop
    or multi-edge is rejected wholesale and re-paired.  An odd degree sum is
    repaired by redrawing one uniformly chosen degree.  Every node's realized
    degree equals its drawn degree.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    degrees = rng.choice(dist.support, size=n, p=dist.mass)
    parity_guard = 0
    while degrees.sum() % 2 == 1:
        degrees[rng.integers(n)] = rng.choice(dist.support, p=dist.mass)
        parity_guard += 1
        if parity_guard > 10000:
            raise PairingError("could not reach an even degree sum (is the support all-odd?)")
    if degrees.max() > n - 1:
        raise PairingError("drawn degree exceeds n - 1; no simple graph exists")

    stubs = np.repeat(np.arange(n), degrees)
    for attempt in range(max_attempts):
        perm = rng.permutation(len(stubs))
        a = stubs[perm[0::2]]
        b = stubs[perm[1::2]]
        if np.any(a == b):
            continue
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * n + hi
        if len(np.unique(keys)) != len(keys):
            continue
        return Graph(n, zip(lo.tolist(), hi.tolist()))
    raise PairingError(
        f"stub pairing failed {max_attempts} times for degree sum {int(degrees.sum())}"
    )


def generate_erdos_renyi(rng: np.random.Generator, n: int, avg_degree: float) -> Graph:
    """G(n, p) with p = avg_degree / (n - 1)."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0.0 <= avg_degree <= n - 1:
        raise ValueError(f"avg_degree must lie in [0, n-1], got {avg_degree}")
    p = avg_degree / (n - 1)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p
    return Graph(n, zip(iu[mask].tolist(), ju[mask].tolist()))


@dataclass(frozen=True)
class IngestResult:
    graph: Graph
    id_map: dict[int, int]  # external id -> dense 0..n-1
    self_loops_dropped: int
    duplicates_dropped: int
    lines_read: int


def ingest_edge_list(source, symmetrize: bool = True) -> IngestResult:
    """Parse '#'-commented 'u v' integer pairs into a simple graph.

    External node ids are remapped to dense 0..n-1 in first-appearance order;
    the map is retained in the result.  Directed inputs are symmetrized by
    default; self-loops are dropped and counted; duplicate edges collapse.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    elif isinstance(source, str) and "\n" in source:
        lines = source.splitlines()
    elif isinstance(source, str) and not os.path.exists(source):
        lines = source.splitlines()  # single-line inline text
    else:
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()

    ext_ids: set[int] = set()
    ext_pairs: list[tuple[int, int]] = []
    self_loops = 0
    seen: set[tuple[int, int]] = set()
    duplicates = 0
    lines_read = 0
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        lines_read += 1
        parts = stripped.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected two node ids, got {line!r}")
        try:
            u_ext, v_ext = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: non-integer node id in {line!r}") from exc
        ext_ids.update((u_ext, v_ext))
        if u_ext == v_ext:
            self_loops += 1
            continue
        key = (min(u_ext, v_ext), max(u_ext, v_ext)) if symmetrize else (u_ext, v_ext)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        ext_pairs.append((u_ext, v_ext))

    if not ext_ids:
        raise GraphFormatError("empty input: no edges found")

    # Canonical compaction: sorted external ids -> 0..n-1, so re-emitting and
    # re-ingesting reproduces the identical labeled graph.
    id_map = {ext: dense for dense, ext in enumerate(sorted(ext_ids))}
    undirected = {
        (min(id_map[u], id_map[v]), max(id_map[u], id_map[v])) for u, v in ext_pairs
    }
    graph = Graph(len(id_map), undirected)
    return IngestResult(
        graph=graph,
        id_map=id_map,
        self_loops_dropped=self_loops,
        duplicates_dropped=duplicates,
        lines_read=lines_read,
    )


@dataclass(frozen=True)
class SparsityReport:
    d_max: int
    n_quarter_root: float
    ratio: float
    moment_2_5: float  # empirical E[D^2.5]
    threshold: float
    flagged: bool


def check_sparsity(graph: Graph, threshold: float = 1.0) -> SparsityReport:
    """Compare D_max against N^(1/4) and report E[D^2.5]."""
    d_max = graph.max_degree()
    root = graph.n ** 0.25
    ratio = d_max / root
    moment = float(np.mean(graph.degrees.astype(float) ** 2.5))
    return SparsityReport(
        d_max=d_max,
        n_quarter_root=root,
        ratio=ratio,
        moment_2_5=moment,
        threshold=threshold,
        flagged=ratio > threshold,
    )


@dataclass(frozen=True)
class DegreeMoments:
    mean: float
    second_moment: float
    rho0: float
    rho_tilde: DegreeDistribution | None


def degree_moments(graph: Graph) -> DegreeMoments:
    """Exact empirical degree moments; rho_tilde present iff some node has a friend."""
    dist = DegreeDistribution.from_graph(graph)
    rho0 = dist.rho0
    return DegreeMoments(
        mean=dist.mean(),
        second_moment=dist.second_moment(),
        rho0=rho0,
        rho_tilde=dist.rho_tilde() if rho0 < 1.0 else None,
    )
