"""Undirected simple graphs for the dynamics: generation, file I/O, density checks.

Graphs are stored in a flat CSR-like layout (``neighbors``/``offsets``) so the
round engine can gather neighbor states with vectorized indexing.  Every
constructed graph is validated: simple, symmetric, and with minimum degree 1
(the update rule samples neighbors, so isolated nodes are a hard error).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "GraphConstructionError",
    "GraphKind",
    "GraphSpec",
    "Graph",
    "DensityReport",
    "GraphFormatError",
    "generate",
    "load_edge_list",
    "save_edge_list",
    "density_report",
    "parse_graph_spec",
]

_REGULAR_REPAIR_ATTEMPTS = 1000


class GraphKind(Enum):
    COMPLETE = "complete"
    GNP = "gnp"
    RANDOM_REGULAR = "regular"
    FILE = "file"


class GraphFormatError(ValueError):
    """Malformed edge-list file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class GraphConstructionError(RuntimeError):
    """A structurally valid spec produced an unusable graph (isolated node,
    regular pairing not realizable, ...)."""


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for a graph: kind plus the kind's parameters and a seed."""

    kind: GraphKind
    n: int = 0
    edge_prob: float | None = None
    degree: int | None = None
    path: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind is GraphKind.FILE:
            if not self.path:
                raise ValueError("file graph spec requires a path")
            return
        if self.n < 2:
            raise ValueError(f"graph needs n >= 2 nodes, got n={self.n}")
        if self.kind is GraphKind.GNP:
            if self.edge_prob is None or not 0.0 < self.edge_prob <= 1.0:
                raise ValueError(f"gnp requires edge probability in (0, 1], got {self.edge_prob!r}")
        if self.kind is GraphKind.RANDOM_REGULAR:
            d = self.degree
            if d is None or d < 1 or d >= self.n:
                raise ValueError(f"regular graph requires 1 <= d < n, got d={d!r}")
            if (d * self.n) % 2 != 0:
                raise ValueError(f"regular graph requires d*n even, got d={d}, n={self.n}")

    def label(self) -> str:
        """Canonical CLI-syntax string for this spec."""
        if self.kind is GraphKind.COMPLETE:
            return f"complete:n={self.n}"
        if self.kind is GraphKind.GNP:
            return f"gnp:n={self.n},p={self.edge_prob:g}"
        if self.kind is GraphKind.RANDOM_REGULAR:
            return f"regular:n={self.n},d={self.degree}"
        return f"file:{self.path}"


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph in flat adjacency layout.

    ``neighbors[offsets[u]:offsets[u+1]]`` is the sorted neighbor list of u;
    ``total_volume`` is the degree sum (twice the edge count).
    """

    n: int
    neighbors: np.ndarray  # int32, length = sum of degrees
    offsets: np.ndarray    # int64, length n + 1
    degrees: np.ndarray    # int64, length n
    total_volume: int

    def neighbors_of(self, u: int) -> np.ndarray:
        return self.neighbors[self.offsets[u] : self.offsets[u + 1]]

    @property
    def edge_count(self) -> int:
        return self.total_volume // 2

    @property
    def is_complete(self) -> bool:
        return self.total_volume == self.n * (self.n - 1)

    def edges(self):
        """Iterate edges once each as (u, v) with u < v."""
        for u in range(self.n):
            for v in self.neighbors_of(u):
                if u < v:
                    yield u, int(v)


def _build_from_pairs(n: int, pairs: np.ndarray) -> Graph:
    """Assemble a Graph from an array of undirected edges (u, v), u != v.

    Pairs must already be deduplicated; validation of simplicity happens at
    the call sites where line numbers / retry semantics are known.
    """
    if pairs.size == 0:
        raise GraphConstructionError("graph has no edges; every node needs degree >= 1")
    both = np.concatenate([pairs, pairs[:, ::-1]])
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    degrees = np.bincount(both[:, 0], minlength=n).astype(np.int64)
    if degrees.min() < 1:
        isolated = int(np.argmin(degrees))
        raise GraphConstructionError(
            f"node {isolated} is isolated; the dynamics cannot sample a neighbor"
        )
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=offsets[1:])
    return Graph(
        n=n,
        neighbors=np.ascontiguousarray(both[:, 1], dtype=np.int32),
        offsets=offsets,
        degrees=degrees,
        total_volume=int(degrees.sum()),
    )


def _generate_complete(n: int) -> Graph:
    grid = np.tile(np.arange(n, dtype=np.int32), (n, 1))
    flat = grid[~np.eye(n, dtype=bool)]  # row u keeps everything but u, sorted
    degrees = np.full(n, n - 1, dtype=np.int64)
    offsets = np.arange(n + 1, dtype=np.int64) * (n - 1)
    return Graph(n=n, neighbors=flat, offsets=offsets, degrees=degrees,
                 total_volume=int(n * (n - 1)))


def _generate_gnp(n: int, edge_prob: float, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    rows = []
    for u in range(n - 1):
        mask = rng.random(n - 1 - u) < edge_prob
        vs = np.nonzero(mask)[0] + u + 1
        if vs.size:
            rows.append(np.stack([np.full(vs.size, u, dtype=np.int64), vs], axis=1))
    if not rows:
        raise GraphConstructionError("gnp draw produced no edges; every node needs degree >= 1")
    return _build_from_pairs(n, np.concatenate(rows))


def _generate_random_regular(n: int, d: int, seed: int) -> Graph:
    """Pairing model with local repair: shuffle d stubs per node into pairs,
    then repeatedly reshuffle the stubs of colliding pairs (self-loops or
    duplicate edges) together with as many randomly chosen good pairs."""
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    stubs = rng.permutation(stubs)
    for _ in range(_REGULAR_REPAIR_ATTEMPTS):
        pairs = stubs.reshape(-1, 2)
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        self_loops = lo == hi
        key = lo * n + hi
        order = np.argsort(key, kind="stable")
        sorted_key = key[order]
        dup_flags = np.zeros(len(key), dtype=bool)
        dup_run = np.concatenate([[False], sorted_key[1:] == sorted_key[:-1]])
        # mark every member of a duplicated group (first occurrence included)
        dup_flags[order[dup_run]] = True
        dup_flags[order[:-1][dup_run[1:]]] = True
        bad = self_loops | dup_flags
        n_bad = int(bad.sum())
        if n_bad == 0:
            return _build_from_pairs(n, np.stack([lo, hi], axis=1))
        good_idx = np.nonzero(~bad)[0]
        extra = good_idx[rng.permutation(len(good_idx))[: min(n_bad, len(good_idx))]]
        recycle = np.concatenate([np.nonzero(bad)[0], extra])
        slots = np.concatenate([2 * recycle, 2 * recycle + 1])
        stubs[slots] = rng.permutation(stubs[slots])
    raise GraphConstructionError(
        f"could not realize a simple {d}-regular graph on {n} nodes "
        f"after {_REGULAR_REPAIR_ATTEMPTS} repair attempts"
    )


def generate(spec: GraphSpec) -> Graph:
    """Materialize a GraphSpec; deterministic given the spec's seed."""
    if spec.kind is GraphKind.COMPLETE:
        return _generate_complete(spec.n)
    if spec.kind is GraphKind.GNP:
        return _generate_gnp(spec.n, spec.edge_prob, spec.seed)
    if spec.kind is GraphKind.RANDOM_REGULAR:
        return _generate_random_regular(spec.n, spec.degree, spec.seed)
    return load_edge_list(spec.path)


# ---------------------------------------------------------------------------
# Edge-list files
# ---------------------------------------------------------------------------

_HEADER_RE = re.compile(r"#\s*n\s*=\s*(\d+)\s*$")


def load_edge_list(path: str | Path) -> Graph:
    """Read a whitespace-separated edge list (one undirected edge per line,
    0-indexed, listed once).  '#' lines are comments; an optional '# n=<N>'
    header pins the node count.  Violations are reported with line numbers.
    """
    declared_n: int | None = None
    pairs: list[tuple[int, int]] = []
    seen: dict[tuple[int, int], int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _HEADER_RE.match(line)
                if m and declared_n is None:
                    declared_n = int(m.group(1))
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise GraphFormatError(f"expected two node ids, got {len(tokens)} tokens", lineno)
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise GraphFormatError(f"non-integer token in {tokens!r}", lineno) from None
            if u < 0 or v < 0:
                raise GraphFormatError(f"negative node id in edge ({u}, {v})", lineno)
            if u == v:
                raise GraphFormatError(f"self-loop at node {u}", lineno)
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(
                    f"duplicate edge {key} (first listed on line {seen[key]})", lineno
                )
            seen[key] = lineno
            if declared_n is not None and max(u, v) >= declared_n:
                raise GraphFormatError(
                    f"node id {max(u, v)} >= declared n={declared_n}", lineno
                )
            pairs.append(key)
    if not pairs:
        raise GraphFormatError("edge list is empty")
    n = declared_n if declared_n is not None else max(max(e) for e in pairs) + 1
    return _build_from_pairs(n, np.asarray(pairs, dtype=np.int64))


def save_edge_list(graph: Graph, path: str | Path) -> None:
    """Write the graph as '# n=<n>' followed by one 'u v' line per edge (u < v)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={graph.n}\n")
        for u, v in graph.edges():
            fh.write(f"{u} {v}\n")


# ---------------------------------------------------------------------------
# Density diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityReport:
    """Degree summary against the dense-graph working assumption.

    ``warning`` is set when min_degree < 4 ln(n) — a fixed-n proxy for the
    superlogarithmic minimum degree the theory asks for; it flags runs on
    graphs where the mean-field predictions should not be trusted.
    """

    min_degree: int
    max_degree: int
    mean_degree: float
    log_n: float
    min_degree_over_log_n: float
    warning: bool


def density_report(graph: Graph) -> DensityReport:
    if graph.n < 2:
        raise ValueError("density report needs n >= 2")
    log_n = math.log(graph.n)
    dmin = int(graph.degrees.min())
    return DensityReport(
        min_degree=dmin,
        max_degree=int(graph.degrees.max()),
        mean_degree=float(graph.degrees.mean()),
        log_n=log_n,
        min_degree_over_log_n=dmin / log_n,
        warning=dmin < 4.0 * log_n,
    )


# ---------------------------------------------------------------------------
# CLI spec syntax
# ---------------------------------------------------------------------------


def parse_graph_spec(text: str, seed: int = 0) -> GraphSpec:
    """Parse 'complete:n=1000', 'gnp:n=1000,p=0.3', 'regular:n=1000,d=200',
    or 'file:PATH' into a GraphSpec."""
    kind, sep, rest = text.partition(":")
    if not sep:
        raise ValueError(f"graph spec {text!r} must look like 'kind:params'")
    kind = kind.strip().lower()
    if kind == "file":
        return GraphSpec(kind=GraphKind.FILE, path=rest, seed=seed)
    params: dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"malformed graph parameter {item!r} in {text!r}")
            params[key.strip()] = val.strip()
    try:
        if kind == "complete":
            return GraphSpec(kind=GraphKind.COMPLETE, n=int(params.pop("n")), seed=seed,
                             **_no_extras(params, text))
        if kind == "gnp":
            return GraphSpec(kind=GraphKind.GNP, n=int(params.pop("n")),
                             edge_prob=float(params.pop("p")), seed=seed,
                             **_no_extras(params, text))
        if kind == "regular":
            return GraphSpec(kind=GraphKind.RANDOM_REGULAR, n=int(params.pop("n")),
                             degree=int(params.pop("d")), seed=seed,
                             **_no_extras(params, text))
    except KeyError as missing:
        raise ValueError(f"graph spec {text!r} is missing parameter {missing}") from None
    raise ValueError(f"unknown graph kind {kind!r} (expected complete/gnp/regular/file)")


def _no_extras(params: dict, text: str) -> dict:
    if params:
        raise ValueError(f"unknown graph parameters {sorted(params)} in {text!r}")
    return {}
