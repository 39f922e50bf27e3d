"""Cluster-to-floor mapping, evaluation metrics, bootstrap intervals and McNemar tests."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import FormatError, ValidationError

REPORT_SCHEMA = "floorsep.report/1"


def _labels(x) -> np.ndarray:
    return np.asarray(getattr(x, "labels", x))


def _truth_list(truth, n: int) -> list:
    """Accept a sequence or an id -> label mapping covering 0..n-1."""
    if isinstance(truth, dict):
        missing = [i for i in range(n) if i not in truth]
        if missing:
            raise ValidationError(f"node {missing[0]} has no ground-truth label")
        return [truth[i] for i in range(n)]
    truth = list(truth)
    if len(truth) != n:
        raise ValidationError(f"truth has {len(truth)} labels for {n} nodes")
    return truth


def map_clusters(assignment, truth) -> dict:
    """Map every cluster to its most frequent true label; ties go to the smallest label."""
    labels = _labels(assignment)
    truth = _truth_list(truth, len(labels))
    counts: dict = {}
    for c, t in zip(labels.tolist(), truth):
        counts.setdefault(c, Counter())[t] += 1
    mapping = {}
    for c, cnt in counts.items():
        top = max(cnt.values())
        mapping[c] = min(t for t, v in cnt.items() if v == top)
    return mapping


def mapped_predictions(assignment, mapping: dict) -> list:
    return [mapping[c] for c in _labels(assignment).tolist()]


def mapped_accuracy(assignment, mapping: dict, truth) -> float:
    labels = _labels(assignment)
    truth = _truth_list(truth, len(labels))
    pred = mapped_predictions(labels, mapping)
    return sum(p == t for p, t in zip(pred, truth)) / len(truth)


def _weighted_f1(pred: list, truth: list) -> float:
    support = Counter(truth)
    predicted = Counter(pred)
    hits = Counter(t for p, t in zip(pred, truth) if p == t)
    total = 0.0
    for lab, s in support.items():
        tp = hits[lab]
        denom = s + predicted[lab]
        # F1 = 2 tp / (support + predicted); a label never predicted scores 0
        total += s * (2.0 * tp / denom if denom else 0.0)
    return total / len(truth)


def _weighted_f1_codes(pred: np.ndarray, truth: np.ndarray, k: int) -> float:
    # same quantity as _weighted_f1 on integer-coded labels, for bootstrap loops
    support = np.bincount(truth, minlength=k)
    predicted = np.bincount(pred, minlength=k)
    hits = np.bincount(truth[pred == truth], minlength=k)
    denom = support + predicted
    f1 = np.divide(2.0 * hits, denom, out=np.zeros(k), where=denom > 0)
    return float((support * f1).sum() / len(truth))


def weighted_f1(assignment, mapping: dict, truth) -> float:
    """Support-weighted F1 over true labels, on the mapped predictions."""
    labels = _labels(assignment)
    truth = _truth_list(truth, len(labels))
    return _weighted_f1(mapped_predictions(labels, mapping), truth)


def _contingency(truth, pred) -> np.ndarray:
    _, ti = np.unique(np.asarray(truth, dtype=object).astype(str), return_inverse=True)
    _, pi = np.unique(np.asarray(pred, dtype=object).astype(str), return_inverse=True)
    table = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(table, (ti, pi), 1)
    return table


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def ari(truth, pred) -> float:
    """Pair-counting adjusted Rand index."""
    truth, pred = list(truth), list(_labels(pred))
    if len(truth) != len(pred):
        raise ValidationError("label vectors differ in length")
    n = len(truth)
    if n < 2:
        return 1.0
    table = _contingency(truth, pred)
    index = _comb2(table).sum()
    a = _comb2(table.sum(1)).sum()
    b = _comb2(table.sum(0)).sum()
    total = n * (n - 1) / 2.0
    expected = a * b / total
    maximum = (a + b) / 2.0
    if maximum == expected:
        # both partitions trivial in the same way (all singletons or one block)
        return 1.0
    return float((index - expected) / (maximum - expected))


def _entropy(counts) -> float:
    p = np.asarray(counts, dtype=np.float64)
    p = p[p > 0] / p.sum()
    return float(-(p * np.log(p)).sum())


def nmi(truth, pred) -> float:
    """Mutual information over the arithmetic mean of the two entropies; 0/0 counts as 0."""
    truth, pred = list(truth), list(_labels(pred))
    if len(truth) != len(pred):
        raise ValidationError("label vectors differ in length")
    table = _contingency(truth, pred).astype(np.float64)
    n = table.sum()
    ht, hp = _entropy(table.sum(1)), _entropy(table.sum(0))
    norm = (ht + hp) / 2.0
    if norm == 0.0:
        return 0.0
    rows = table.sum(1, keepdims=True)
    cols = table.sum(0, keepdims=True)
    nz = table > 0
    mi = float((table[nz] / n * np.log(table[nz] * n / (rows @ cols)[nz])).sum())
    return max(0.0, min(1.0, mi / norm))


def purity(truth, pred) -> float:
    truth, pred = list(truth), list(_labels(pred))
    if len(truth) != len(pred):
        raise ValidationError("label vectors differ in length")
    table = _contingency(truth, pred)
    return float(table.max(axis=0).sum() / len(truth))


# --------------------------------------------------------------------------- uncertainty


def bootstrap_ci(flags, B: int = 1000, level: float = 0.95, seed: int = 0, statistic=None, groups=None):
    """Percentile bootstrap; returns (point estimate, lo, hi).

    ``statistic`` maps an index array to a number (default: mean of ``flags``
    over those indices). ``groups`` switches the resampling unit to whole
    groups, for example trajectories.
    """
    flags = np.asarray(flags, dtype=np.float64)
    n = len(flags)
    if n == 0:
        raise ValidationError("bootstrap needs a non-empty sample")
    if B < 1 or not 0.0 < level < 1.0:
        raise ValidationError("bootstrap needs B >= 1 and 0 < level < 1")
    rng = np.random.default_rng(seed)
    if statistic is None and groups is None:
        idx = rng.integers(n, size=(B, n))
        stats = flags[idx].mean(axis=1)
        point = float(flags.mean())
    else:
        stat = statistic or (lambda ix: float(flags[ix].mean()))
        point = float(stat(np.arange(n)))
        if groups is None:
            draws = (rng.integers(n, size=n) for _ in range(B))
        else:
            groups = np.asarray(groups)
            if len(groups) != n:
                raise ValidationError("groups must have one entry per sample")
            _, inv = np.unique(groups, return_inverse=True)
            members = [np.flatnonzero(inv == g) for g in range(inv.max() + 1)]
            draws = (
                np.concatenate([members[g] for g in rng.integers(len(members), size=len(members))]) for _ in range(B)
            )
        stats = np.array([stat(ix) for ix in draws])
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return point, float(lo), float(hi)


def mcnemar(correct_a, correct_b) -> float:
    """Exact two-sided McNemar test: p = min(1, 2 P(X <= min(b, c))), X ~ Bin(b + c, 1/2)."""
    a = np.asarray(correct_a, dtype=bool)
    b_ = np.asarray(correct_b, dtype=bool)
    if a.shape != b_.shape:
        raise ValidationError("McNemar needs flag vectors of equal length")
    b = int(np.sum(a & ~b_))
    c = int(np.sum(~a & b_))
    m = b + c
    if m == 0:
        return 1.0
    k = min(b, c)
    tail = sum(math.comb(m, i) for i in range(k + 1)) / 2.0**m
    return min(1.0, 2.0 * tail)


# --------------------------------------------------------------------------- confusion and views


@dataclass
class ConfusionMatrix:
    labels: list
    counts: np.ndarray  # rows: true label, columns: mapped prediction

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true\\pred", *self.labels])
            for lab, row in zip(self.labels, self.counts.tolist()):
                w.writerow([lab, *row])

    @classmethod
    def from_csv(cls, path) -> "ConfusionMatrix":
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][:1] != ["true\\pred"]:
            raise FormatError(f"{path}: not a confusion-matrix CSV")
        labels = rows[0][1:]
        if [r[0] for r in rows[1:]] != labels:
            raise FormatError(f"{path}: row labels do not match column labels")
        counts = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=np.int64).reshape(len(labels), len(labels))
        return cls(labels, counts)


def confusion_matrix(assignment, mapping: dict, truth) -> ConfusionMatrix:
    labels = _labels(assignment)
    truth = _truth_list(truth, len(labels))
    pred = mapped_predictions(labels, mapping)
    names = sorted(set(truth) | set(pred))
    pos = {lab: i for i, lab in enumerate(names)}
    counts = np.zeros((len(names), len(names)), dtype=np.int64)
    for t, p in zip(truth, pred):
        counts[pos[t], pos[p]] += 1
    return ConfusionMatrix(names, counts)


def trajectory_consistent_view(assignment, trajectories) -> np.ndarray:
    """Give every fingerprint its trajectory's modal cluster (ties: smallest cluster id)."""
    labels = _labels(assignment).copy()
    for t in trajectories:
        ids = list(getattr(t, "fingerprint_ids", t))
        if not ids:
            continue
        cnt = Counter(labels[ids].tolist())
        top = max(cnt.values())
        labels[ids] = min(c for c, v in cnt.items() if v == top)
    return labels


# --------------------------------------------------------------------------- report


@dataclass
class EvaluationReport:
    accuracy: float
    f1_weighted: float
    ari: float
    nmi: float
    purity: float
    ci_accuracy: tuple[float, float]
    ci_f1: tuple[float, float]
    bootstrap_B: int
    level: float
    n: int
    clusters: int
    resample_unit: str = "fingerprint"

    def to_json(self, extra: dict | None = None) -> str:
        """Versioned JSON document; ``extra`` adds run-level fields such as the method."""
        doc = {"schema": REPORT_SCHEMA, **(extra or {}), **asdict(self)}
        doc["ci_accuracy"] = list(self.ci_accuracy)
        doc["ci_f1"] = list(self.ci_f1)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        doc = json.loads(text)
        if doc.pop("schema", None) != REPORT_SCHEMA:
            raise FormatError("unsupported report schema")
        doc["ci_accuracy"] = tuple(doc["ci_accuracy"])
        doc["ci_f1"] = tuple(doc["ci_f1"])
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in known})


def evaluate(assignment, truth, B: int = 1000, level: float = 0.95, seed: int = 0, groups=None) -> EvaluationReport:
    """All metrics plus percentile-bootstrap intervals for accuracy and weighted F1."""
    labels = _labels(assignment)
    truth = _truth_list(truth, len(labels))
    mapping = map_clusters(labels, truth)
    pred = mapped_predictions(labels, mapping)
    flags = np.array([p == t for p, t in zip(pred, truth)], dtype=np.float64)
    acc, lo_a, hi_a = bootstrap_ci(flags, B, level, seed, groups=groups)
    names = {lab: i for i, lab in enumerate(sorted(set(truth) | set(pred)))}
    t_codes = np.array([names[t] for t in truth])
    p_codes = np.array([names[p] for p in pred])
    f1_stat = lambda ix: _weighted_f1_codes(p_codes[ix], t_codes[ix], len(names))  # noqa: E731
    f1, lo_f, hi_f = bootstrap_ci(flags, B, level, seed, statistic=f1_stat, groups=groups)
    return EvaluationReport(
        accuracy=acc,
        f1_weighted=f1,
        ari=ari(truth, labels),
        nmi=nmi(truth, labels),
        purity=purity(truth, labels),
        ci_accuracy=(lo_a, hi_a),
        ci_f1=(lo_f, hi_f),
        bootstrap_B=B,
        level=level,
        n=len(labels),
        clusters=len(set(labels.tolist())),
        resample_unit="fingerprint" if groups is None else "trajectory",
    )
