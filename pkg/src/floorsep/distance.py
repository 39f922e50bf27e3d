"""Pairwise distance sources: provided estimates, planar geometry, and an RSSI heuristic.

The RSSI heuristic is a log-distance path-loss proxy: every AP reading is
turned into a range ``10 ** ((p0 - rssi) / (10 * gamma))`` and two
fingerprints are as far apart as their ranges disagree on the APs they share.
It stands in for a trained distance regressor; anything implementing
:class:`DistanceProvider` can replace it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numba
import numpy as np

from .errors import ConfigurationError, FormatError, ValidationError
from .ingest import DistanceRecord, Fingerprint, RawDataset

DISTANCE_SOURCES = ("provided", "geometric", "signal")


@dataclass(frozen=True)
class SignalHeuristic:
    p0: float = -40.0
    gamma: float = 3.0
    d_max: float = 50.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigurationError("gamma must be positive")
        if not self.d_max > 0:
            raise ConfigurationError("d_max must be positive")

    def range_of(self, rssi: float) -> float:
        return 10.0 ** ((self.p0 - rssi) / (10.0 * self.gamma))


def signal_distance(fp_a: Fingerprint, fp_b: Fingerprint, heuristic: SignalHeuristic | None = None) -> float:
    """Mean absolute path-loss range difference over the APs both fingerprints see.

    Returns ``heuristic.d_max`` when the AP sets are disjoint.
    """
    h = heuristic or SignalHeuristic()
    if not fp_a.rssi or not fp_b.rssi:
        raise ValidationError("signal_distance needs non-empty RSSI maps")
    shared = sorted(fp_a.rssi.keys() & fp_b.rssi.keys())
    if not shared:
        return h.d_max
    total = 0.0
    for ap in shared:
        total += abs(h.range_of(fp_a.rssi[ap]) - h.range_of(fp_b.rssi[ap]))
    return total / len(shared)


class SignalIndex:
    """CSR view of a dataset's RSSI maps, pre-converted to ranges.

    Ranges are computed with the same Python expression as
    :func:`signal_distance`, and the numba kernels sum shared APs in the same
    (sorted) order, so both paths return bit-identical distances.
    """

    def __init__(self, fingerprints: list[Fingerprint], heuristic: SignalHeuristic | None = None):
        self.heuristic = heuristic or SignalHeuristic()
        n = len(fingerprints)
        indptr = np.zeros(n + 1, dtype=np.int64)
        aps: list[int] = []
        ranges: list[float] = []
        for i, fp in enumerate(fingerprints):
            for ap in sorted(fp.rssi):
                aps.append(ap)
                ranges.append(self.heuristic.range_of(fp.rssi[ap]))
            indptr[i + 1] = len(aps)
        self.indptr = indptr
        self.aps = np.asarray(aps, dtype=np.int64)
        self.ranges = np.asarray(ranges, dtype=np.float64)
        n_aps = int(self.aps.max()) + 1 if len(self.aps) else 0
        # inverted index: AP -> fingerprints observing it (ascending)
        order = np.argsort(self.aps, kind="stable")
        owners = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
        self.ap_members = owners[order]
        self.ap_indptr = np.zeros(n_aps + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.aps, minlength=n_aps), out=self.ap_indptr[1:])

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    def distance(self, a: int, b: int) -> float:
        return _pair_distance(self.indptr, self.aps, self.ranges, a, b, self.heuristic.d_max)

    def distances(self, pairs: np.ndarray) -> np.ndarray:
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        return _pair_distances(self.indptr, self.aps, self.ranges, pairs, self.heuristic.d_max)

    def closest_pair(self, group_a, group_b) -> tuple[float, int, int]:
        a = np.sort(np.asarray(group_a, dtype=np.int64))
        b = np.sort(np.asarray(group_b, dtype=np.int64))
        d, i, j = _closest_pair(self.indptr, self.aps, self.ranges, a, b, self.heuristic.d_max)
        return float(d), int(i), int(j)

    def nearest_neighbours(self, m: int) -> np.ndarray:
        """Top-``m`` neighbours per fingerprint, ranked by shared-AP count then distance.

        Returns an ``(n, m)`` array padded with -1 where fewer candidates share an AP.
        """
        return _knn(self.indptr, self.aps, self.ranges, self.ap_indptr, self.ap_members, m, self.heuristic.d_max)


@numba.njit(cache=True)
def _pair_distance(indptr, aps, ranges, a, b, d_max):
    i, i_end = indptr[a], indptr[a + 1]
    j, j_end = indptr[b], indptr[b + 1]
    total = 0.0
    shared = 0
    while i < i_end and j < j_end:
        if aps[i] == aps[j]:
            total += abs(ranges[i] - ranges[j])
            shared += 1
            i += 1
            j += 1
        elif aps[i] < aps[j]:
            i += 1
        else:
            j += 1
    if shared == 0:
        return d_max
    return total / shared


@numba.njit(cache=True)
def _shared_count(indptr, aps, a, b):
    i, i_end = indptr[a], indptr[a + 1]
    j, j_end = indptr[b], indptr[b + 1]
    shared = 0
    while i < i_end and j < j_end:
        if aps[i] == aps[j]:
            shared += 1
            i += 1
            j += 1
        elif aps[i] < aps[j]:
            i += 1
        else:
            j += 1
    return shared


@numba.njit(cache=True)
def _pair_distances(indptr, aps, ranges, pairs, d_max):
    out = np.empty(pairs.shape[0])
    for k in range(pairs.shape[0]):
        out[k] = _pair_distance(indptr, aps, ranges, pairs[k, 0], pairs[k, 1], d_max)
    return out


@numba.njit(cache=True)
def _closest_pair(indptr, aps, ranges, group_a, group_b, d_max):
    best = np.inf
    best_u = -1
    best_v = -1
    for x in group_a:
        for y in group_b:
            d = _pair_distance(indptr, aps, ranges, x, y, d_max)
            u = min(x, y)
            v = max(x, y)
            if d < best or (d == best and (u < best_u or (u == best_u and v < best_v))):
                best = d
                best_u = u
                best_v = v
    return best, best_u, best_v


@numba.njit(cache=True)
def _knn(indptr, aps, ranges, ap_indptr, ap_members, m, d_max):
    n = len(indptr) - 1
    out = np.full((n, m), -1, dtype=np.int64)
    if m == 0:
        return out
    counts = np.zeros(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    for i in range(n):
        nt = 0
        for a in range(indptr[i], indptr[i + 1]):
            ap = aps[a]
            for k in range(ap_indptr[ap], ap_indptr[ap + 1]):
                j = ap_members[k]
                if j == i:
                    continue
                if counts[j] == 0:
                    touched[nt] = j
                    nt += 1
                counts[j] += 1
        if nt > 0:
            # only candidates at or above the m-th largest shared count can make the cut
            max_c = indptr[i + 1] - indptr[i]
            hist = np.zeros(max_c + 1, dtype=np.int64)
            for t in range(nt):
                hist[counts[touched[t]]] += 1
            threshold = 1
            acc = 0
            for c in range(max_c, 0, -1):
                acc += hist[c]
                if acc >= m:
                    threshold = c
                    break
            cand = np.empty(nt, dtype=np.int64)
            cand_c = np.empty(nt, dtype=np.int64)
            cand_d = np.empty(nt)
            nc = 0
            for t in range(nt):
                j = touched[t]
                if counts[j] >= threshold:
                    cand[nc] = j
                    cand_c[nc] = counts[j]
                    cand_d[nc] = _pair_distance(indptr, aps, ranges, i, j, d_max)
                    nc += 1
            used = np.zeros(nc, dtype=np.bool_)
            for slot in range(min(m, nc)):
                best = -1
                for c in range(nc):
                    if used[c]:
                        continue
                    if best < 0:
                        best = c
                        continue
                    if cand_c[c] > cand_c[best]:
                        best = c
                    elif cand_c[c] == cand_c[best]:
                        if cand_d[c] < cand_d[best] or (cand_d[c] == cand_d[best] and cand[c] < cand[best]):
                            best = c
                used[best] = True
                out[i, slot] = cand[best]
        for t in range(nt):
            counts[touched[t]] = 0
    return out


# --------------------------------------------------------------------------- pair policy


@dataclass(frozen=True)
class PairPolicy:
    consecutive: bool = True
    knn_m: int = 10

    def __post_init__(self):
        if self.knn_m < 0:
            raise ConfigurationError("knn_m must be non-negative")


def _norm(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def candidate_pairs(
    ds: RawDataset,
    mode: PairPolicy | None = None,
    heuristic: SignalHeuristic | None = None,
    index: SignalIndex | None = None,
) -> list[tuple[int, int]]:
    """Pairs that receive a distance estimate: trajectory neighbours plus signal-space kNN.

    Output pairs are ``(low, high)``, unique and sorted.
    """
    mode = mode or PairPolicy()
    pairs: set[tuple[int, int]] = set()
    if mode.consecutive:
        for t in ds.trajectories:
            ids = t.fingerprint_ids
            for a, b in zip(ids, ids[1:]):
                if a != b:
                    pairs.add(_norm(a, b))
    if mode.knn_m > 0 and ds.n > 1:
        index = index or SignalIndex(ds.fingerprints, heuristic)
        nbrs = index.nearest_neighbours(mode.knn_m)
        for i in range(ds.n):
            for j in nbrs[i]:
                if j >= 0:
                    pairs.add(_norm(i, int(j)))
    return sorted(pairs)


# --------------------------------------------------------------------------- sources


def provided_distances(ds: RawDataset) -> list[DistanceRecord]:
    if ds.provided_distances is None:
        raise ConfigurationError(
            "dataset carries no provided distances; use --distance-source geometric or signal"
        )
    bad = []
    for k, r in enumerate(ds.provided_distances):
        if not (0 <= r.id_a < ds.n and 0 <= r.id_b < ds.n):
            bad.append(f"record {k}: unknown id")
        elif r.id_a == r.id_b:
            bad.append(f"record {k}: self pair {r.id_a}")
        elif not (math.isfinite(r.meters) and r.meters >= 0):
            bad.append(f"record {k}: invalid distance {r.meters}")
    if bad:
        raise ValidationError("invalid provided distances: " + "; ".join(bad[:20]))
    return list(ds.provided_distances)


def geometric_distances(ds: RawDataset, pairs: Iterable[tuple[int, int]]) -> list[DistanceRecord]:
    coords = ds.coordinates or {}
    out = []
    for a, b in pairs:
        for i in (a, b):
            if i not in coords:
                raise ValidationError(f"no coordinates for fingerprint {i}")
        (xa, ya), (xb, yb) = coords[a], coords[b]
        out.append(DistanceRecord(a, b, math.hypot(xa - xb, ya - yb)))
    return out


def signal_distances(
    ds: RawDataset,
    pairs: Iterable[tuple[int, int]],
    heuristic: SignalHeuristic | None = None,
    index: SignalIndex | None = None,
) -> list[DistanceRecord]:
    pairs = list(pairs)
    if not pairs:
        return []
    index = index or SignalIndex(ds.fingerprints, heuristic)
    for a, b in pairs:
        if not ds.fingerprints[a].rssi or not ds.fingerprints[b].rssi:
            raise ValidationError(f"empty RSSI map in pair ({a}, {b})")
    d = index.distances(np.asarray(pairs, dtype=np.int64))
    return [DistanceRecord(a, b, float(x)) for (a, b), x in zip(pairs, d)]


class DistanceProvider(Protocol):
    kind: str

    def distances(self, ds: RawDataset) -> list[DistanceRecord]: ...


@dataclass(frozen=True)
class ProvidedSource:
    kind: str = "provided"

    def distances(self, ds: RawDataset) -> list[DistanceRecord]:
        return provided_distances(ds)


@dataclass(frozen=True)
class GeometricSource:
    pairs: PairPolicy = PairPolicy()
    heuristic: SignalHeuristic = SignalHeuristic()
    kind: str = "geometric"

    def distances(self, ds: RawDataset) -> list[DistanceRecord]:
        # pairs are chosen in signal space so the geometric scenario differs
        # from the signal one only in the distance values
        return geometric_distances(ds, candidate_pairs(ds, self.pairs, self.heuristic))


@dataclass(frozen=True)
class SignalSource:
    pairs: PairPolicy = PairPolicy()
    heuristic: SignalHeuristic = SignalHeuristic()
    kind: str = "signal"

    def distances(self, ds: RawDataset) -> list[DistanceRecord]:
        index = SignalIndex(ds.fingerprints, self.heuristic)
        return signal_distances(ds, candidate_pairs(ds, self.pairs, index=index), index=index)


def make_source(kind: str, pairs: PairPolicy | None = None, heuristic: SignalHeuristic | None = None):
    pairs = pairs or PairPolicy()
    heuristic = heuristic or SignalHeuristic()
    if kind == "provided":
        return ProvidedSource()
    if kind == "geometric":
        return GeometricSource(pairs, heuristic)
    if kind == "signal":
        return SignalSource(pairs, heuristic)
    raise ConfigurationError(f"unknown distance source {kind!r}; expected one of {DISTANCE_SOURCES}")


# --------------------------------------------------------------------------- CSV


def write_distance_csv(records: Iterable[DistanceRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id1", "id2", "distance"])
        for r in records:
            w.writerow([r.id_a, r.id_b, repr(float(r.meters))])


def read_distance_csv(path) -> list[DistanceRecord]:
    out = []
    with open(Path(path), encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if lineno == 1 and row[0].strip() == "id1":
                continue
            if len(row) < 3:
                raise FormatError(f"{path}: row {lineno} has {len(row)} columns, expected 3")
            try:
                out.append(DistanceRecord(int(row[0]), int(row[1]), float(row[2])))
            except ValueError:
                raise FormatError(f"{path}: malformed row {lineno}") from None
    return out
