"""Trajectory graph construction.

Nodes are fingerprints. Edges come from trajectory steps, distance records,
optional elevation pairs, and synthetic links that only restore connectivity.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .distance import SignalHeuristic, SignalIndex
from .errors import ConfigurationError, FormatError, IntegrityError, ValidationError
from .ingest import DistanceRecord, RawDataset


class EdgeKind(enum.IntEnum):
    STEP = 0
    DISTANCE = 1
    ELEVATION = 2
    SYNTHETIC = 3

    @property
    def label(self) -> str:
        return self.name.lower()


# lower value wins when duplicate edges collapse
_PRECEDENCE = {EdgeKind.STEP: 0, EdgeKind.DISTANCE: 1, EdgeKind.ELEVATION: 2, EdgeKind.SYNTHETIC: 3}


@dataclass(frozen=True)
class GraphConfig:
    sigma: float | None = None  # None: median of the input distances
    step_default_weight: float = 1.0
    elevation_policy: str = "exclude"  # "exclude" (and split the step chain) or "include"
    elevation_weight: float = 1.0
    synthetic_weight: float = 0.01
    d_max: float = 50.0

    def __post_init__(self):
        if self.sigma is not None and not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigurationError("sigma must be positive and finite")
        if self.elevation_policy not in ("exclude", "include"):
            raise ConfigurationError(f"unknown elevation policy {self.elevation_policy!r}")
        for name in ("step_default_weight", "elevation_weight", "synthetic_weight", "d_max"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigurationError(f"{name} must be positive and finite")


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    weight: float
    kind: EdgeKind


@dataclass(frozen=True)
class TrajectoryGraph:
    """Undirected simple weighted graph; edges are stored once with ``u < v``, sorted."""

    n: int
    edges: tuple[Edge, ...] = field(default_factory=tuple)
    sigma: float = 1.0

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, neighbours, weights) with each neighbour list sorted by id."""
        deg = np.zeros(self.n, dtype=np.int64)
        for e in self.edges:
            deg[e.u] += 1
            deg[e.v] += 1
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        nbrs = np.empty(indptr[-1], dtype=np.int64)
        wts = np.empty(indptr[-1], dtype=np.float64)
        fill = indptr[:-1].copy()
        for e in self.edges:
            for a, b in ((e.u, e.v), (e.v, e.u)):
                nbrs[fill[a]] = b
                wts[fill[a]] = e.weight
                fill[a] += 1
        for i in range(self.n):
            s, t = indptr[i], indptr[i + 1]
            order = np.argsort(nbrs[s:t], kind="stable")
            nbrs[s:t] = nbrs[s:t][order]
            wts[s:t] = wts[s:t][order]
        return indptr, nbrs, wts

    def neighbours(self, i: int) -> dict[int, float]:
        indptr, nbrs, wts = self.csr
        s, t = indptr[i], indptr[i + 1]
        return dict(zip(nbrs[s:t].tolist(), wts[s:t].tolist()))

    def adjacency(self) -> list[dict[int, float]]:
        return [self.neighbours(i) for i in range(self.n)]

    def kinds(self) -> Counter:
        return Counter(e.kind for e in self.edges)


def distance_to_weight(meters: float, sigma: float) -> float:
    """Exponential kernel ``exp(-meters / sigma)``, in (0, 1]."""
    if not (math.isfinite(meters) and math.isfinite(sigma)):
        raise ValidationError("distance_to_weight needs finite inputs")
    if meters < 0:
        raise ValidationError("distance must be non-negative")
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    return math.exp(-meters / sigma)


def _collapse(candidates: dict[tuple[int, int], tuple[float, EdgeKind]], u, v, w, kind):
    key = (u, v) if u < v else (v, u)
    old = candidates.get(key)
    if old is None:
        candidates[key] = (w, kind)
        return
    best_kind = kind if _PRECEDENCE[kind] < _PRECEDENCE[old[1]] else old[1]
    candidates[key] = (max(w, old[0]), best_kind)


def default_sigma(dists: list[DistanceRecord]) -> float:
    values = [r.meters for r in dists if math.isfinite(r.meters)]
    if not values:
        return 1.0
    s = float(np.median(values))
    return s if s > 0 else 1.0


def build_graph(ds: RawDataset, dists: list[DistanceRecord], cfg: GraphConfig | None = None) -> TrajectoryGraph:
    """Assemble the weighted trajectory graph.

    Duplicate edges collapse to the maximum weight; the surviving kind follows
    the precedence step > distance > elevation > synthetic.
    """
    cfg = cfg or GraphConfig()
    n = ds.n
    bad = [(r.id_a, r.id_b) for r in dists if not (0 <= r.id_a < n and 0 <= r.id_b < n)]
    if bad:
        raise IntegrityError("distance records reference unknown fingerprints", bad)
    sigma = cfg.sigma if cfg.sigma is not None else default_sigma(dists)

    pair_weight: dict[tuple[int, int], float] = {}
    for r in dists:
        if r.id_a == r.id_b:
            continue
        if not (math.isfinite(r.meters) and r.meters >= 0):
            raise ValidationError(f"invalid distance {r.meters} for pair ({r.id_a}, {r.id_b})")
        key = (r.id_a, r.id_b) if r.id_a < r.id_b else (r.id_b, r.id_a)
        w = distance_to_weight(min(r.meters, cfg.d_max), sigma)
        if w > pair_weight.get(key, 0.0):
            pair_weight[key] = w

    elevation = {(a, b) if a < b else (b, a) for a, b in ds.elevation_pairs if a != b}
    candidates: dict[tuple[int, int], tuple[float, EdgeKind]] = {}
    for t in ds.trajectories:
        ids = t.fingerprint_ids
        for a, b in zip(ids, ids[1:]):
            if a == b:
                continue
            key = (a, b) if a < b else (b, a)
            if cfg.elevation_policy == "exclude" and key in elevation:
                continue
            w = pair_weight.get(key, cfg.step_default_weight)
            _collapse(candidates, a, b, w, EdgeKind.STEP)
    for (a, b), w in pair_weight.items():
        if cfg.elevation_policy == "exclude" and (a, b) in elevation:
            continue
        _collapse(candidates, a, b, w, EdgeKind.DISTANCE)
    if cfg.elevation_policy == "include":
        for a, b in sorted(elevation):
            _collapse(candidates, a, b, cfg.elevation_weight, EdgeKind.ELEVATION)

    edges = tuple(Edge(u, v, w, k) for (u, v), (w, k) in sorted(candidates.items()))
    return TrajectoryGraph(n, edges, sigma)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)
        return ra != rb


def components(g: TrajectoryGraph) -> list[list[int]]:
    """Connected components, each sorted, ordered by smallest member."""
    uf = _UnionFind(g.n)
    for e in g.edges:
        uf.union(e.u, e.v)
    groups: dict[int, list[int]] = {}
    for i in range(g.n):
        groups.setdefault(uf.find(i), []).append(i)
    return sorted(groups.values(), key=lambda c: c[0])


def ensure_connected(
    g: TrajectoryGraph,
    ds: RawDataset,
    cfg: GraphConfig | None = None,
    heuristic: SignalHeuristic | None = None,
) -> TrajectoryGraph:
    """Join components with synthetic edges until the graph is connected.

    Each round links the two largest components through their closest pair
    in signal space (lowest ``(u, v)`` on ties). Synthetic edges carry
    ``cfg.synthetic_weight``, capped at half the weakest existing edge so they
    stay weaker than every real edge.
    """
    cfg = cfg or GraphConfig()
    comps = components(g)
    if len(comps) <= 1:
        return g
    weakest = min((e.weight for e in g.edges), default=cfg.synthetic_weight * 2)
    weight = min(cfg.synthetic_weight, weakest / 2)
    index = SignalIndex(ds.fingerprints, heuristic)
    pool = [list(c) for c in comps]
    added: list[Edge] = []
    while len(pool) > 1:
        pool.sort(key=lambda c: (-len(c), c[0]))
        a, b = pool[0], pool[1]
        _, u, v = index.closest_pair(a, b)
        added.append(Edge(u, v, weight, EdgeKind.SYNTHETIC))
        pool = [sorted(a + b)] + pool[2:]
    edges = tuple(sorted(g.edges + tuple(added), key=lambda e: (e.u, e.v)))
    return TrajectoryGraph(g.n, edges, g.sigma)


@dataclass(frozen=True)
class GraphStats:
    n: int
    m: int
    components: int
    weight_histogram: tuple[tuple[float, float, int], ...]
    kind_counts: dict[str, int]


def graph_stats(g: TrajectoryGraph, bins: int = 10) -> GraphStats:
    counts = {k.label: 0 for k in EdgeKind}
    for e in g.edges:
        counts[e.kind.label] += 1
    hist: tuple = ()
    if g.edges:
        w = np.array([e.weight for e in g.edges])
        edges = np.linspace(0.0, max(1.0, float(w.max())), bins + 1)
        h, _ = np.histogram(w, bins=edges)
        hist = tuple((float(lo), float(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], h))
    return GraphStats(g.n, g.m, len(components(g)) if g.n else 0, hist, counts)


# --------------------------------------------------------------------------- edge list IO


def write_edgelist(g: TrajectoryGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# n {g.n} sigma {g.sigma!r}\n")
        for e in sorted(g.edges, key=lambda e: (e.u, e.v)):
            fh.write(f"{e.u} {e.v} {e.weight!r} {e.kind.label}\n")


def read_edgelist(path) -> TrajectoryGraph:
    kinds = {k.label: k for k in EdgeKind}
    n = None
    sigma = 1.0
    edges = []
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) >= 2 and parts[0] == "n":
                    n = int(parts[1])
                if len(parts) >= 4 and parts[2] == "sigma":
                    sigma = float(parts[3])
                continue
            parts = line.split()
            if len(parts) != 4 or parts[3] not in kinds:
                raise FormatError(f"{path}: malformed edge on line {lineno}")
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
            edges.append(Edge(min(u, v), max(u, v), w, kinds[parts[3]]))
    if n is None:
        n = 1 + max((e.v for e in edges), default=-1)
    edges.sort(key=lambda e: (e.u, e.v))
    return TrajectoryGraph(n, tuple(edges), sigma)


def graph_from_edges(n: int, weighted_edges, kind: EdgeKind = EdgeKind.DISTANCE) -> TrajectoryGraph:
    """Convenience constructor from ``(u, v, w)`` triples; duplicates keep the max weight."""
    cand: dict[tuple[int, int], tuple[float, EdgeKind]] = {}
    for u, v, w in weighted_edges:
        if u == v:
            continue
        if not (u < n and v < n):
            raise IntegrityError("edge references unknown node", [(u, v)])
        _collapse(cand, u, v, float(w), kind)
    return TrajectoryGraph(n, tuple(Edge(u, v, w, k) for (u, v), (w, k) in sorted(cand.items())))
