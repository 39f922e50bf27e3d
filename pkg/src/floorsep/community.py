"""Community-detection baselines on the trajectory graph.

Louvain, Leiden, asynchronous label propagation and CNM greedy agglomeration
("fast greedy"), all on weighted Newman modularity with a resolution
parameter (1.0 gives classic modularity).
"""

from __future__ import annotations

import csv
import heapq
import math
import random
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FormatError, ValidationError
from .graph import TrajectoryGraph

ALGORITHMS = ("louvain", "leiden", "label_propagation", "fast_greedy")


@dataclass(frozen=True)
class Partition:
    labels: np.ndarray

    @property
    def count(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def communities(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.count)]
        for i, c in enumerate(self.labels.tolist()):
            groups[c].append(i)
        return groups


def dense_partition(labels) -> Partition:
    """Renumber arbitrary community ids to 0..c-1 in order of first appearance."""
    mapping: dict = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, c in enumerate(labels):
        if c not in mapping:
            mapping[c] = len(mapping)
        out[i] = mapping[c]
    return Partition(out)


def modularity(g: TrajectoryGraph, part, resolution: float = 1.0) -> float:
    """Weighted Newman modularity of ``part`` (a Partition or label sequence)."""
    labels = np.asarray(getattr(part, "labels", part))
    if len(labels) != g.n:
        raise ValidationError("partition size does not match graph")
    if g.m == 0:
        raise ValidationError("modularity is undefined on a graph without edges")
    internal: dict[int, float] = defaultdict(float)
    total: dict[int, float] = defaultdict(float)
    two_m = 0.0
    for e in g.edges:
        two_m += 2.0 * e.weight
        total[labels[e.u]] += e.weight
        total[labels[e.v]] += e.weight
        if labels[e.u] == labels[e.v]:
            internal[labels[e.u]] += 2.0 * e.weight
    return sum(internal[c] / two_m - resolution * (total[c] / two_m) ** 2 for c in total)


# --------------------------------------------------------------------------- working graph


class _WGraph:
    """Weighted graph with self-loops, as produced by community aggregation."""

    def __init__(self, adj: list[dict[int, float]], loops: list[float]):
        self.adj = adj
        self.loops = loops
        self.n = len(adj)
        self.degree = [sum(a.values()) + 2.0 * l for a, l in zip(adj, loops)]
        self.two_m = sum(self.degree)

    @classmethod
    def from_graph(cls, g: TrajectoryGraph) -> "_WGraph":
        adj: list[dict[int, float]] = [dict() for _ in range(g.n)]
        for e in g.edges:
            adj[e.u][e.v] = adj[e.u].get(e.v, 0.0) + e.weight
            adj[e.v][e.u] = adj[e.v].get(e.u, 0.0) + e.weight
        return cls(adj, [0.0] * g.n)

    def aggregate(self, labels: list[int]) -> "_WGraph":
        c = max(labels) + 1
        adj: list[dict[int, float]] = [dict() for _ in range(c)]
        loops = [0.0] * c
        for i in range(self.n):
            ci = labels[i]
            loops[ci] += self.loops[i]
            for j, w in self.adj[i].items():
                cj = labels[j]
                if ci == cj:
                    if i < j:
                        loops[ci] += w
                else:
                    adj[ci][cj] = adj[ci].get(cj, 0.0) + w
        return _WGraph(adj, loops)


def _renumber(labels: list[int]) -> list[int]:
    mapping: dict[int, int] = {}
    return [mapping.setdefault(c, len(mapping)) for c in labels]


def _move_nodes(wg: _WGraph, labels: list[int], rng: random.Random, resolution: float, queue_mode: bool) -> bool:
    """Greedy local moves; returns True if any node changed community.

    ``queue_mode`` follows the Leiden fast local move (revisit only the
    neighbours of moved nodes); otherwise full Louvain sweeps repeat until a
    sweep makes no move.
    """
    tot = defaultdict(float)
    for i in range(wg.n):
        tot[labels[i]] += wg.degree[i]
    next_free = max(labels) + 1 if labels else 0
    moved_any = False
    order = list(range(wg.n))
    rng.shuffle(order)
    if queue_mode:
        queue = list(order)
        in_queue = [True] * wg.n
        head = 0
    while True:
        moved = False
        if queue_mode:
            if head >= len(queue):
                break
            batch = [queue[head]]
            head += 1
        else:
            batch = order
        for i in batch:
            if queue_mode:
                in_queue[i] = False
            ki = wg.degree[i]
            old = labels[i]
            links = defaultdict(float)
            for j, w in wg.adj[i].items():
                links[labels[j]] += w
            tot[old] -= ki
            scale = resolution * ki / wg.two_m if wg.two_m > 0 else 0.0
            best, best_gain = old, links.get(old, 0.0) - scale * tot[old]
            for c in sorted(links):
                gain = links[c] - scale * tot[c]
                if gain > best_gain + 1e-12:
                    best, best_gain = c, gain
            # an empty community is also a candidate (gain 0)
            if best_gain < -1e-12 and tot[old] > 0:
                best, best_gain = next_free, 0.0
                next_free += 1
            tot[best] += ki
            if best != old:
                labels[i] = best
                moved = moved_any = True
                if queue_mode:
                    for j in wg.adj[i]:
                        if labels[j] != best and not in_queue[j]:
                            in_queue[j] = True
                            queue.append(j)
        if not queue_mode and not moved:
            break
    return moved_any


def _flatten(levels: list[list[int]], n: int) -> list[int]:
    labels = list(range(n))
    for level in levels:
        labels = [level[c] for c in labels]
    return labels


def louvain(g: TrajectoryGraph, seed: int = 0, resolution: float = 1.0) -> Partition:
    """Two-phase Louvain: local moves to the best modularity gain, then aggregation."""
    rng = random.Random(seed)
    wg = _WGraph.from_graph(g)
    levels: list[list[int]] = []
    while True:
        labels = list(range(wg.n))
        moved = _move_nodes(wg, labels, rng, resolution, queue_mode=False)
        labels = _renumber(labels)
        if not moved or max(labels, default=-1) + 1 == wg.n:
            break
        levels.append(labels)
        wg = wg.aggregate(labels)
    return dense_partition(_flatten(levels, g.n))


def _refine(wg: _WGraph, labels: list[int], rng: random.Random, resolution: float, theta: float) -> list[int]:
    """Leiden refinement: inside each community, merge singletons into well-connected subsets.

    A node only joins a subset it has edges to, so every refined subset is connected.
    """
    refined = list(range(wg.n))
    size = [1] * wg.n
    sub_tot = list(wg.degree)
    members: dict[int, list[int]] = defaultdict(list)
    for i, c in enumerate(labels):
        members[c].append(i)
    gamma = resolution / wg.two_m if wg.two_m > 0 else 0.0
    for c in sorted(members):
        nodes = members[c]
        inside = set(nodes)
        comm_tot = sum(wg.degree[i] for i in nodes)
        # weight from each refined subset to the rest of its community
        ext = {i: sum(w for j, w in wg.adj[i].items() if j in inside) for i in nodes}
        order = list(nodes)
        rng.shuffle(order)
        for v in order:
            kv = wg.degree[v]
            if size[refined[v]] > 1:
                continue
            if ext[v] < gamma * kv * (comm_tot - kv) - 1e-12:
                continue
            links = defaultdict(float)
            for j, w in wg.adj[v].items():
                if j in inside and refined[j] != refined[v]:
                    links[refined[j]] += w
            cands, gains = [], []
            for r in sorted(links):
                if ext[r] < gamma * sub_tot[r] * (comm_tot - sub_tot[r]) - 1e-12:
                    continue
                gain = links[r] - gamma * kv * sub_tot[r]
                if gain >= 0:
                    cands.append(r)
                    gains.append(gain)
            if not cands:
                continue
            top = max(gains)
            weights = [math.exp((x - top) / theta) for x in gains]
            pick = rng.random() * sum(weights)
            target = cands[-1]
            acc = 0.0
            for r, wgt in zip(cands, weights):
                acc += wgt
                if pick < acc:
                    target = r
                    break
            old = refined[v]
            refined[v] = target
            size[old] -= 1
            size[target] += 1
            sub_tot[old] -= kv
            sub_tot[target] += kv
            ext[target] = ext[target] + ext[old] - 2.0 * links[target]
            ext[old] = 0.0
    return refined


def _split_disconnected(g: TrajectoryGraph, labels: list[int]) -> list[int]:
    """Split each community into its connected components (never lowers modularity)."""
    adj = [[] for _ in range(g.n)]
    for e in g.edges:
        if labels[e.u] == labels[e.v]:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
    out = [-1] * g.n
    nxt = 0
    for s in range(g.n):
        if out[s] >= 0:
            continue
        out[s] = nxt
        stack = [s]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if out[y] < 0:
                    out[y] = nxt
                    stack.append(y)
        nxt += 1
    return out


def leiden(g: TrajectoryGraph, seed: int = 0, resolution: float = 1.0, theta: float = 0.01) -> Partition:
    """Leiden: fast local moves, refinement, aggregation on the refined partition.

    Every returned community induces a connected subgraph.
    """
    rng = random.Random(seed)
    wg = _WGraph.from_graph(g)
    # node of the current aggregate graph -> original nodes
    owner = list(range(g.n))
    labels = list(range(wg.n))
    for _ in range(1000):
        _move_nodes(wg, labels, rng, resolution, queue_mode=True)
        labels = _renumber(labels)
        if max(labels, default=-1) + 1 == wg.n:
            break
        refined = _renumber(_refine(wg, labels, rng, resolution, theta))
        if max(refined) + 1 == wg.n:
            # refinement merged nothing; aggregate on the moved partition instead
            refined = labels
        agg_labels = [0] * (max(refined) + 1)
        for i, r in enumerate(refined):
            agg_labels[r] = labels[i]
        owner = [refined[o] for o in owner]
        wg = wg.aggregate(refined)
        labels = agg_labels
    flat = [labels[o] for o in owner]
    return dense_partition(_split_disconnected(g, flat))


def label_propagation(g: TrajectoryGraph, seed: int = 0, max_passes: int = 100) -> Partition:
    """Asynchronous label propagation with seeded node order and tie-breaking.

    A node keeps its label when that label is among the heaviest; other ties
    are broken uniformly at random.
    """
    rng = random.Random(seed)
    adj = g.adjacency()
    labels = list(range(g.n))
    order = list(range(g.n))
    for _ in range(max_passes):
        rng.shuffle(order)
        changed = False
        for i in order:
            if not adj[i]:
                continue
            weight = defaultdict(float)
            for j, w in adj[i].items():
                weight[labels[j]] += w
            top = max(weight.values())
            best = sorted(c for c, w in weight.items() if w >= top - 1e-12 * max(1.0, abs(top)))
            if labels[i] in best:
                continue
            labels[i] = best[rng.randrange(len(best))]
            changed = True
        if not changed:
            break
    return dense_partition(labels)


def fast_greedy(g: TrajectoryGraph, resolution: float = 1.0) -> Partition:
    """Clauset-Newman-Moore agglomeration: merge the pair with the largest modularity gain while it is positive.

    Ties go to the smallest (i, j) community-id pair; the merged community keeps id ``i``.
    """
    n = g.n
    adj = g.adjacency()
    two_m = 2.0 * sum(e.weight for e in g.edges)
    if two_m == 0:
        return dense_partition(list(range(n)))
    a = [sum(adj[i].values()) / two_m for i in range(n)]
    e: list[dict[int, float]] = [{j: w / two_m for j, w in adj[i].items()} for i in range(n)]
    dq: dict[tuple[int, int], float] = {}
    heap = []
    for i in range(n):
        for j, eij in e[i].items():
            if i < j:
                q = 2.0 * (eij - resolution * a[i] * a[j])
                dq[(i, j)] = q
                heap.append((-q, i, j))
    heapq.heapify(heap)
    alive = [True] * n
    parent = list(range(n))
    while heap:
        negq, i, j = heapq.heappop(heap)
        if not (alive[i] and alive[j]) or dq.get((i, j)) != -negq:
            continue
        if -negq <= 0:
            break
        # merge j into i
        alive[j] = False
        parent[j] = i
        del dq[(i, j)]
        e[i].pop(j, None)
        e[j].pop(i, None)
        for k, ejk in e[j].items():
            e[i][k] = e[i].get(k, 0.0) + ejk
            e[k][i] = e[k].get(i, 0.0) + ejk
            del e[k][j]
            dq.pop((min(j, k), max(j, k)), None)
        e[j] = {}
        a[i] += a[j]
        a[j] = 0.0
        for k, eik in e[i].items():
            key = (min(i, k), max(i, k))
            q = 2.0 * (eik - resolution * a[i] * a[k])
            dq[key] = q
            heapq.heappush(heap, (-q, key[0], key[1]))

    def root(x):
        while parent[x] != x:
            x = parent[x]
        return x

    return dense_partition([root(i) for i in range(n)])


def run_baseline(name: str, g: TrajectoryGraph, seed: int = 0, resolution: float = 1.0) -> Partition:
    if name == "louvain":
        return louvain(g, seed, resolution)
    if name == "leiden":
        return leiden(g, seed, resolution)
    if name == "label_propagation":
        return label_propagation(g, seed)
    if name == "fast_greedy":
        return fast_greedy(g, resolution)
    raise ConfigurationError(f"unknown baseline {name!r}; expected one of {ALGORITHMS}")


# --------------------------------------------------------------------------- IO


def write_partition_csv(labels, path) -> None:
    labels = np.asarray(getattr(labels, "labels", labels))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "community_id"])
        for i, c in enumerate(labels.tolist()):
            w.writerow([i, int(c)])


def read_partition_csv(path) -> np.ndarray:
    rows = []
    with open(Path(path), encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1 and row and row[0] == "node_id":
                continue
            if len(row) != 2:
                raise FormatError(f"{path}: malformed row {lineno}")
            rows.append((int(row[0]), int(row[1])))
    rows.sort()
    if [r[0] for r in rows] != list(range(len(rows))):
        raise FormatError(f"{path}: node ids are not 0..n-1")
    return np.array([r[1] for r in rows], dtype=np.int64)
