"""K-Means with k-means++ seeding and Calinski-Harabasz selection of k."""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ValidationError

# stands in for CH = +inf (zero within-cluster dispersion) so argmax still works
CH_SENTINEL = sys.float_info.max


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    k: int
    inertia: float
    centroids: np.ndarray | None = None
    n_iter: int = 0
    inertia_trace: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class KMeansConfig:
    n_init: int = 10
    max_iter: int = 300
    tol: float = 1e-6

    def __post_init__(self):
        if self.n_init < 1 or self.max_iter < 1 or self.tol < 0:
            raise ConfigurationError("invalid k-means configuration")


def _sq_dists(X, C):
    # |x|^2 - 2 x.c + |c|^2, clipped against round-off
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    first = rng.integers(n)
    centers[0] = X[first]
    closest = ((X - X[first]) ** 2).sum(1)
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[c] = X[idx]
        closest = np.minimum(closest, ((X - X[idx]) ** 2).sum(1))
    return centers


def _repair_empty(X, labels, centers, k):
    """Give each empty cluster the point farthest from its own centroid."""
    counts = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(counts == 0):
        own = ((X - centers[labels]) ** 2).sum(1)
        # a point that is the sole member of its cluster cannot move
        own[counts[labels] <= 1] = -1.0
        far = int(np.argmax(own))
        counts[labels[far]] -= 1
        labels[far] = c
        counts[c] = 1
        centers[c] = X[far]
    return labels


def _lloyd(X, k, rng, cfg: KMeansConfig):
    centers = _kmeanspp(X, k, rng)
    labels = np.argmin(_sq_dists(X, centers), axis=1)
    trace = []
    prev = np.inf
    it = 0
    for it in range(1, cfg.max_iter + 1):
        labels = _repair_empty(X, labels, centers, k)
        for c in range(k):
            centers[c] = X[labels == c].mean(axis=0)
        inertia = float(((X - centers[labels]) ** 2).sum())
        trace.append(inertia)
        new_labels = np.argmin(_sq_dists(X, centers), axis=1)
        # keep current label on exact ties so inertia cannot rise from round-off
        d_new = ((X - centers[new_labels]) ** 2).sum(1)
        d_old = ((X - centers[labels]) ** 2).sum(1)
        new_labels = np.where(d_new < d_old, new_labels, labels)
        converged = np.array_equal(new_labels, labels) or (
            np.isfinite(prev) and abs(prev - inertia) <= cfg.tol * max(prev, 1e-300)
        )
        labels = new_labels
        prev = inertia
        if converged:
            break
    labels = _repair_empty(X, labels, centers, k)
    for c in range(k):
        centers[c] = X[labels == c].mean(axis=0)
    inertia = float(((X - centers[labels]) ** 2).sum())
    trace.append(inertia)
    return labels, centers, inertia, it, trace


def kmeans(X, k: int, seed: int = 0, cfg: KMeansConfig | None = None) -> ClusterAssignment:
    """Lloyd's algorithm, best of ``cfg.n_init`` k-means++ restarts by inertia."""
    cfg = cfg or KMeansConfig()
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k < 1:
        raise ValidationError("k must be at least 1")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of points n={n}")
    best = None
    for r in range(cfg.n_init):
        rng = np.random.default_rng([seed, k, r])
        labels, centers, inertia, it, trace = _lloyd(X, k, rng, cfg)
        if best is None or inertia < best.inertia:
            best = ClusterAssignment(canonical_labels(labels), k, inertia, None, it, trace)
    best.centroids = np.stack([X[best.labels == c].mean(axis=0) for c in range(k)])
    return best


def canonical_labels(labels) -> np.ndarray:
    """Relabel clusters by first appearance so equal partitions get equal arrays."""
    labels = np.asarray(labels)
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty(len(first), dtype=np.int64)
    uniq = np.unique(labels)
    remap[order] = np.arange(len(first))
    lookup = dict(zip(uniq.tolist(), remap.tolist()))
    return np.array([lookup[x] for x in labels.tolist()], dtype=np.int64)


def dispersion(X, labels) -> tuple[float, float]:
    """(BGSS, WGSS): between- and within-group sums of squares."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    mean = X.mean(axis=0)
    bgss = 0.0
    wgss = 0.0
    for c in np.unique(labels):
        pts = X[labels == c]
        cen = pts.mean(axis=0)
        bgss += len(pts) * float(((cen - mean) ** 2).sum())
        wgss += float(((pts - cen) ** 2).sum())
    return bgss, wgss


def ch_index(X, labels) -> float:
    """Calinski-Harabasz index ``(BGSS / (k - 1)) / (WGSS / (n - k))``."""
    labels = np.asarray(getattr(labels, "labels", labels))
    n = len(labels)
    k = len(np.unique(labels))
    if not 2 <= k <= n - 1:
        raise ValidationError(f"CH index undefined for k={k}, n={n}")
    bgss, wgss = dispersion(X, labels)
    if wgss == 0.0:
        return CH_SENTINEL
    return (bgss / (k - 1)) / (wgss / (n - k))


@dataclass
class ChSweep:
    entries: list[tuple[int, float, ClusterAssignment]]
    k_opt: int
    k_min: int
    k_max: int

    @property
    def best(self) -> ClusterAssignment:
        return next(a for k, _, a in self.entries if k == self.k_opt)


def auto_k(X, k_min: int = 3, k_max: int = 20, seed: int = 0, cfg: KMeansConfig | None = None) -> ChSweep:
    """Run k-means for every k in ``[k_min, k_max]`` and keep the CH maximiser (smallest k on ties)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k_min < 2 or k_max < k_min:
        raise ConfigurationError(f"invalid k range [{k_min}, {k_max}]")
    if k_max > n - 1:
        raise ConfigurationError(f"k_max={k_max} must be at most n-1={n - 1}")
    entries = []
    for k in range(k_min, k_max + 1):
        a = kmeans(X, k, seed, cfg)
        entries.append((k, ch_index(X, a.labels), a))
    k_opt = entries[0][0]
    best = entries[0][1]
    for k, ch, _ in entries[1:]:
        if ch > best:
            k_opt, best = k, ch
    return ChSweep(entries, k_opt, k_min, k_max)


def write_sweep_csv(sweep: ChSweep, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "ch_value", "inertia", "selected"])
        for k, ch, a in sweep.entries:
            w.writerow([k, repr(float(ch)), repr(float(a.inertia)), int(k == sweep.k_opt)])
