"""Node2Vec: second-order biased random walks plus skip-gram with negative sampling.

Walk generation and SGNS training run in numba kernels with a counter-based
RNG, so a fixed seed gives bit-identical walks and embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numba
import numpy as np

from .errors import ConfigurationError, FormatError, ValidationError
from .graph import TrajectoryGraph

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class WalkConfig:
    p: float = 1.0
    q: float = 1.0
    walks_per_node: int = 10
    walk_length: int = 80
    seed: int = 0

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ConfigurationError("p and q must be positive")
        if self.walks_per_node < 1 or self.walk_length < 1:
            raise ConfigurationError("walks_per_node and walk_length must be at least 1")


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 32
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_lr: float = 1e-4
    ns_exponent: float = 0.75
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise ConfigurationError("dim, window and negatives must be at least 1")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be non-negative")
        if not self.initial_lr > 0:
            raise ConfigurationError("initial_lr must be positive")


# --------------------------------------------------------------------------- RNG


@numba.njit(cache=True)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _stream(seed, a, b):
    """Initial splitmix64 state for the stream indexed by (a, b)."""
    s = _mix(np.uint64(seed) + _GOLDEN)
    s = _mix(s ^ (np.uint64(a) + _GOLDEN))
    return _mix(s ^ (np.uint64(b) * _GOLDEN + np.uint64(1)))


@numba.njit(cache=True)
def _uniform(state):
    state = state + _GOLDEN
    x = _mix(state)
    return state, float(x >> np.uint64(11)) * (1.0 / 9007199254740992.0)


# --------------------------------------------------------------------------- walks


@numba.njit(cache=True)
def _has_edge(indptr, nbrs, a, b):
    lo = indptr[a]
    hi = indptr[a + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if nbrs[mid] < b:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[a + 1] and nbrs[lo] == b


@numba.njit(cache=True)
def _pick(cum, count, u):
    target = u * cum[count - 1]
    lo = 0
    hi = count - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > target:
            hi = mid
        else:
            lo = mid + 1
    return lo


@numba.njit(cache=True)
def _walk_kernel(indptr, nbrs, wts, starts, rounds, length, inv_p, inv_q, seed):
    out = np.full((starts.shape[0], length), -1, dtype=np.int64)
    maxdeg = 1
    for i in range(indptr.shape[0] - 1):
        maxdeg = max(maxdeg, indptr[i + 1] - indptr[i])
    cum = np.empty(maxdeg)
    for k in range(starts.shape[0]):
        state = _stream(seed, starts[k], rounds[k])
        cur = starts[k]
        prev = -1
        out[k, 0] = cur
        for step in range(1, length):
            s = indptr[cur]
            e = indptr[cur + 1]
            if e == s:
                break
            total = 0.0
            for j in range(s, e):
                w = wts[j]
                if prev >= 0:
                    x = nbrs[j]
                    if x == prev:
                        w *= inv_p
                    elif not _has_edge(indptr, nbrs, prev, x):
                        w *= inv_q
                total += w
                cum[j - s] = total
            if not total > 0.0:
                # bias factors underflowed; fall back to first-order weights
                total = 0.0
                for j in range(s, e):
                    total += wts[j]
                    cum[j - s] = total
            state, u = _uniform(state)
            nxt = nbrs[s + _pick(cum, e - s, u)]
            prev = cur
            cur = nxt
            out[k, step] = cur
    return out


def walk_schedule(n: int, cfg: WalkConfig) -> tuple[np.ndarray, np.ndarray]:
    """Start node and round index of every walk, in emission order.

    Each round visits all nodes once in a seeded random order.
    """
    starts, rounds = [], []
    for r in range(cfg.walks_per_node):
        perm = np.random.default_rng([cfg.seed, r]).permutation(n)
        starts.append(perm)
        rounds.append(np.full(n, r, dtype=np.int64))
    if not starts:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(starts).astype(np.int64), np.concatenate(rounds)


def generate_walks(g: TrajectoryGraph, cfg: WalkConfig | None = None) -> list[np.ndarray]:
    """``walks_per_node`` biased walks from every node.

    Moving from ``v`` (reached from ``t``) to neighbour ``x`` has unnormalised
    probability ``w(v, x) * a`` with ``a = 1/p`` if ``x == t``, ``1`` if ``x``
    neighbours ``t`` and ``1/q`` otherwise. Isolated nodes give length-1
    walks. The RNG stream of a walk depends only on (seed, start node, round).
    """
    cfg = cfg or WalkConfig()
    indptr, nbrs, wts = g.csr
    starts, rounds = walk_schedule(g.n, cfg)
    raw = _walk_kernel(indptr, nbrs, wts, starts, rounds, cfg.walk_length, 1.0 / cfg.p, 1.0 / cfg.q, cfg.seed)
    lengths = (raw >= 0).sum(axis=1)
    return [row[:k] for row, k in zip(raw, lengths)]


def write_walks(walks: Iterable[Sequence[int]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for w in walks:
            fh.write(" ".join(str(int(x)) for x in w) + "\n")


# --------------------------------------------------------------------------- SGNS


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def sgns_loss(v_center, u_context, u_negatives) -> float:
    """``-log s(u_c . v) - sum_k log s(-u_k . v)`` for one (center, context) pair."""
    v = np.asarray(v_center, dtype=np.float64)
    pos = float(np.dot(u_context, v))
    negs = np.asarray(u_negatives, dtype=np.float64) @ v
    return float(np.logaddexp(0.0, -pos) + np.logaddexp(0.0, negs).sum())


def sgns_gradients(v_center, u_context, u_negatives):
    """Analytic gradients of :func:`sgns_loss` w.r.t. (v_center, u_context, u_negatives)."""
    v = np.asarray(v_center, dtype=np.float64)
    uc = np.asarray(u_context, dtype=np.float64)
    un = np.asarray(u_negatives, dtype=np.float64)
    g_pos = sigmoid(uc @ v) - 1.0
    g_neg = sigmoid(un @ v)
    grad_v = g_pos * uc + g_neg @ un
    grad_uc = g_pos * v
    grad_un = np.outer(g_neg, v)
    return grad_v, grad_uc, grad_un


@numba.njit(cache=True, fastmath=True)
def _sig(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return z / (1.0 + z)


@numba.njit(cache=True, fastmath=True)
def _sgns_update(syn0, syn1, center, context, negs, n_negs, lr, grad_v):
    """One SGD step on the SGNS loss; negatives equal to the context are skipped.

    The context row is updated before the negatives' scores are computed,
    matching word2vec's sequential update order.
    """
    v = syn0[center]
    d = v.shape[0]
    for i in range(d):
        grad_v[i] = 0.0
    for k in range(n_negs + 1):
        if k == 0:
            target = context
            label = 1.0
        else:
            target = negs[k - 1]
            label = 0.0
            if target == context:
                continue
        u = syn1[target]
        f = 0.0
        for i in range(d):
            f += v[i] * u[i]
        g = (_sig(f) - label) * lr
        for i in range(d):
            grad_v[i] += g * u[i]
        for i in range(d):
            u[i] -= g * v[i]
    for i in range(d):
        v[i] -= grad_v[i]


def alias_table(weights) -> tuple[np.ndarray, np.ndarray]:
    """Walker/Vose alias table for O(1) sampling from ``weights``."""
    w = np.asarray(weights, dtype=np.float64)
    n = len(w)
    scaled = w * (n / w.sum())
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s_, l_ = small.pop(), large.pop()
        prob[s_] = scaled[s_]
        alias[s_] = l_
        scaled[l_] -= 1.0 - scaled[s_]
        (small if scaled[l_] < 1.0 else large).append(l_)
    return prob, alias


@numba.njit(cache=True)
def _alias_draw(prob, alias, u):
    x = u * prob.shape[0]
    c = min(int(x), prob.shape[0] - 1)
    return c if x - c < prob[c] else alias[c]


@numba.njit(cache=True, fastmath=True)
def _train_kernel(corpus, offsets, syn0, syn1, prob, alias, window, negatives, epochs, lr0, lr_min, seed, total_pairs):
    d = syn0.shape[1]
    grad_v = np.empty(d)
    negs = np.empty(negatives, dtype=np.int64)
    state = _stream(seed, 0x5347, 0x4E53)
    processed = 0
    for ep in range(epochs):
        for w in range(offsets.shape[0] - 1):
            s = offsets[w]
            e = offsets[w + 1]
            for pos in range(s, e):
                center = corpus[pos]
                lo = max(s, pos - window)
                hi = min(e, pos + window + 1)
                for cpos in range(lo, hi):
                    if cpos == pos:
                        continue
                    lr = lr0 - (lr0 - lr_min) * (processed / total_pairs)
                    processed += 1
                    for k in range(negatives):
                        state, u = _uniform(state)
                        negs[k] = _alias_draw(prob, alias, u)
                    _sgns_update(syn0, syn1, center, corpus[cpos], negs, negatives, lr, grad_v)


def init_embeddings(n: int, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.random((n, dim)) - 0.5) / dim


def count_pairs(lengths: np.ndarray, window: int) -> int:
    total = 0
    for L in np.unique(lengths):
        pos = np.arange(L)
        per = np.minimum(L, pos + window + 1) - np.maximum(0, pos - window) - 1
        total += int(per.sum()) * int((lengths == L).sum())
    return total


def train_sgns(walks: Sequence[Sequence[int]], cfg: SgnsConfig | None = None, n_nodes: int | None = None) -> np.ndarray:
    """Skip-gram with negative sampling over the walk corpus.

    Input vectors start uniform in ``(-0.5/d, 0.5/d)``, output vectors at
    zero. Negatives come from the unigram distribution raised to
    ``ns_exponent``. The learning rate decays linearly in processed pairs from
    ``initial_lr`` to ``min_lr``. Returns the input vectors, one row per node.
    """
    cfg = cfg or SgnsConfig()
    walks = [np.asarray(w, dtype=np.int64) for w in walks]
    if not walks or not any(len(w) for w in walks):
        raise ValidationError("empty walk corpus")
    corpus = np.concatenate(walks)
    if corpus.min() < 0:
        raise ValidationError("walks contain negative node ids")
    n = int(n_nodes if n_nodes is not None else corpus.max() + 1)
    if corpus.max() >= n:
        raise ValidationError("walk node id exceeds n_nodes")
    syn0 = init_embeddings(n, cfg.dim, cfg.seed)
    if cfg.epochs == 0:
        return syn0
    syn1 = np.zeros((n, cfg.dim))
    lengths = np.array([len(w) for w in walks], dtype=np.int64)
    offsets = np.zeros(len(walks) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    freq = np.bincount(corpus, minlength=n).astype(np.float64)
    prob, alias = alias_table(freq**cfg.ns_exponent)
    total = max(1, count_pairs(lengths, cfg.window) * cfg.epochs)
    _train_kernel(
        corpus, offsets, syn0, syn1, prob, alias, cfg.window, cfg.negatives, cfg.epochs,
        cfg.initial_lr, cfg.min_lr, cfg.seed, float(total),
    )
    return syn0


def node2vec(g: TrajectoryGraph, walk_cfg: WalkConfig | None = None, sgns_cfg: SgnsConfig | None = None) -> np.ndarray:
    walks = generate_walks(g, walk_cfg)
    return train_sgns(walks, sgns_cfg, n_nodes=g.n)


# --------------------------------------------------------------------------- IO


def write_embeddings(matrix: np.ndarray, path) -> None:
    m = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def read_embeddings(path) -> np.ndarray:
    with open(Path(path), encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: header must be 'n d'")
        try:
            n, d = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError(f"{path}: header must be 'n d'") from None
        out = np.empty((n, d))
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) != d:
                raise FormatError(f"{path}: row {i} has {len(parts)} values, expected {d}")
            try:
                out[i] = [float(x) for x in parts]
            except ValueError:
                raise FormatError(f"{path}: row {i} is not numeric") from None
        if fh.readline().strip():
            raise FormatError(f"{path}: more than {n} rows")
    if not np.all(np.isfinite(out)):
        raise FormatError(f"{path}: non-finite values")
    return out
