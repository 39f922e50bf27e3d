import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn import metrics as skm

from floorsep import metrics as M
from floorsep.errors import FormatError, ValidationError

# --------------------------------------------------------------------------- definitional oracles


def oracle_ari(t, p):
    # Rand-style pair counts over every unordered pair, then the Hubert-Arabie adjustment
    n11 = n10 = n01 = n00 = 0
    for i, j in itertools.combinations(range(len(t)), 2):
        st_, sp = t[i] == t[j], p[i] == p[j]
        n11 += st_ and sp
        n10 += st_ and not sp
        n01 += sp and not st_
        n00 += not st_ and not sp
    den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11)
    if den == 0:
        return 1.0
    return 2.0 * (n00 * n11 - n01 * n10) / den


def oracle_nmi(t, p):
    n = len(t)
    pt, pp, pj = Counter(t), Counter(p), Counter(zip(t, p))
    mi = sum(c / n * math.log(c * n / (pt[a] * pp[b])) for (a, b), c in pj.items())
    ht = -sum(c / n * math.log(c / n) for c in pt.values())
    hp = -sum(c / n * math.log(c / n) for c in pp.values())
    norm = (ht + hp) / 2
    return 0.0 if norm == 0 else mi / norm


def oracle_purity(t, p):
    return sum(max(Counter(a for a, b in zip(t, p) if b == c).values()) for c in set(p)) / len(t)


def oracle_mapping(t, p):
    out = {}
    for c in set(p):
        cnt = Counter(a for a, b in zip(t, p) if b == c)
        out[c] = sorted(cnt.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    return out


def oracle_weighted_f1(pred, t):
    n = len(t)
    total = 0.0
    for lab in set(t):
        tp = sum(a == lab and b == lab for a, b in zip(t, pred))
        npred = sum(b == lab for b in pred)
        sup = sum(a == lab for a in t)
        prec = tp / npred if npred else 0.0
        rec = tp / sup
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        total += sup / n * f1
    return total


def random_labeling(rng, n=None):
    n = n or int(rng.integers(1, 31))
    kt, kp = int(rng.integers(1, 6)), int(rng.integers(1, 8))
    t = [f"F{x}" for x in rng.integers(0, kt, size=n)]
    p = rng.integers(0, kp, size=n).tolist()
    return t, p


def test_metric_oracles_on_random_labelings():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        t, p = random_labeling(rng)
        mapping = M.map_clusters(p, t)
        assert mapping == oracle_mapping(t, p)
        pred = [mapping[c] for c in p]
        assert M.mapped_accuracy(p, mapping, t) == pytest.approx(sum(a == b for a, b in zip(pred, t)) / len(t), abs=1e-10)
        assert M.weighted_f1(p, mapping, t) == pytest.approx(oracle_weighted_f1(pred, t), abs=1e-10)
        assert M.ari(t, p) == pytest.approx(oracle_ari(t, p), abs=1e-10)
        assert M.nmi(t, p) == pytest.approx(oracle_nmi(t, p), abs=1e-10)
        assert M.purity(t, p) == pytest.approx(oracle_purity(t, p), abs=1e-10)


def test_against_sklearn():
    rng = np.random.default_rng(5)
    for _ in range(50):
        t, p = random_labeling(rng, 25)
        assert M.ari(t, p) == pytest.approx(skm.adjusted_rand_score(t, p), abs=1e-10)
        if len(set(t)) > 1 or len(set(p)) > 1:
            assert M.nmi(t, p) == pytest.approx(skm.normalized_mutual_info_score(t, p), abs=1e-10)
        mapping = M.map_clusters(p, t)
        pred = [mapping[c] for c in p]
        assert M.weighted_f1(p, mapping, t) == pytest.approx(
            skm.f1_score(t, pred, average="weighted", labels=sorted(set(t)), zero_division=0), abs=1e-10
        )


# --------------------------------------------------------------------------- worked examples


def test_mapping_examples():
    assert M.map_clusters([0, 0, 0], ["F1", "F1", "F2"]) == {0: "F1"}
    assert M.map_clusters([0, 0], ["F2", "F1"]) == {0: "F1"}
    with pytest.raises(ValidationError, match="node 1"):
        M.map_clusters([0, 0], {0: "F1"})


def test_accuracy_single_cluster_is_majority_fraction():
    t = ["a"] * 7 + ["b"] * 3
    p = [0] * 10
    assert M.mapped_accuracy(p, M.map_clusters(p, t), t) == 0.7


def test_weighted_f1_example():
    t = ["F0", "F0", "F1", "F1"]
    p = [0, 0, 0, 0]
    assert M.weighted_f1(p, {0: "F0"}, t) == pytest.approx(1 / 3, abs=1e-15)


def test_ari_examples():
    assert M.ari([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5, abs=1e-15)
    assert M.ari([0, 0, 1, 1], [5, 5, 7, 7]) == 1.0
    assert M.ari([0, 0, 1, 1, 2], [0] * 5) == 0.0


def test_nmi_examples():
    assert M.nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert M.nmi([0, 0, 1, 1], [0, 0, 0, 0]) == 0.0
    assert M.nmi([0, 0, 0], [0, 0, 0]) == 0.0  # 0/0 counts as 0


def test_purity_examples():
    assert M.purity(["F0", "F0", "F1", "F1", "F1"], ["A", "A", "A", "B", "B"]) == pytest.approx(0.8)
    assert M.purity(["F0", "F1", "F1"], [0, 1, 2]) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 5)), min_size=1, max_size=30), st.randoms(use_true_random=False))
def test_relabel_invariance_and_purity_bound(pairs, rnd):
    t = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    perm_t = list(range(4))
    perm_p = list(range(6))
    rnd.shuffle(perm_t)
    rnd.shuffle(perm_p)
    t2 = [perm_t[x] + 10 for x in t]
    p2 = [perm_p[x] for x in p]
    assert M.ari(t, p) == pytest.approx(M.ari(t2, p2), abs=1e-12)
    assert M.nmi(t, p) == pytest.approx(M.nmi(t2, p2), abs=1e-12)
    assert -1.0 <= M.ari(t, p) <= 1.0
    assert 0.0 <= M.nmi(t, p) <= 1.0
    acc = M.mapped_accuracy(p, M.map_clusters(p, t), t)
    assert M.purity(t, p) >= acc - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 3)), min_size=1, max_size=12))
def test_majority_mapping_is_best_map(pairs):
    t = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    clusters = sorted(set(p))
    labels = sorted(set(t))
    best = max(
        sum(m[p_i] == t_i for p_i, t_i in zip(p, t))
        for m in (dict(zip(clusters, combo)) for combo in itertools.product(labels, repeat=len(clusters)))
    )
    got = M.mapped_accuracy(p, M.map_clusters(p, t), t)
    assert got * len(t) == pytest.approx(best)


def test_length_mismatch():
    for f in (M.ari, M.nmi, M.purity):
        with pytest.raises(ValidationError):
            f([0, 1], [0])


# --------------------------------------------------------------------------- uncertainty


def test_bootstrap_degenerate():
    assert M.bootstrap_ci(np.ones(50)) == (1.0, 1.0, 1.0)
    assert M.bootstrap_ci(np.zeros(50)) == (0.0, 0.0, 0.0)
    with pytest.raises(ValidationError):
        M.bootstrap_ci([])


def test_bootstrap_fair_coin_width():
    flags = np.tile([0, 1], 500)
    _, lo, hi = M.bootstrap_ci(flags, B=1000, seed=0)
    theory = 2 * 1.959964 * math.sqrt(0.25 / 1000)
    assert abs((hi - lo) - theory) <= 0.3 * theory


def test_bootstrap_converges_and_deterministic():
    flags = np.random.default_rng(3).random(400) < 0.7
    rng = np.random.default_rng(0)
    means = flags[rng.integers(400, size=(10000, 400))].mean(1)
    assert abs(means.mean() - flags.mean()) < 0.005
    assert M.bootstrap_ci(flags, seed=9) == M.bootstrap_ci(flags, seed=9)


def test_bootstrap_groups_resample_whole_groups():
    # two groups, each internally constant: every resample mean is 0, 0.5 or 1
    flags = np.array([1] * 5 + [0] * 5)
    groups = np.array([0] * 5 + [1] * 5)
    point, lo, hi = M.bootstrap_ci(flags, B=500, seed=1, groups=groups)
    assert point == 0.5
    assert lo in (0.0, 0.5) and hi in (0.5, 1.0)
    with pytest.raises(ValidationError):
        M.bootstrap_ci(flags, groups=groups[:3])


def test_bootstrap_custom_statistic_matches_vectorised():
    flags = (np.arange(30) % 3 == 0).astype(float)
    a = M.bootstrap_ci(flags, B=200, seed=4)
    b = M.bootstrap_ci(flags, B=200, seed=4, statistic=lambda ix: float(flags[ix].mean()))
    assert a[0] == b[0]


def test_mcnemar():
    a = np.array([True] * 10 + [True] * 5)
    b = np.array([False] * 10 + [True] * 5)
    assert M.mcnemar(a, b) == pytest.approx(0.001953125, abs=1e-6)
    assert M.mcnemar(a, a) == 1.0
    with pytest.raises(ValidationError):
        M.mcnemar(a, b[:3])


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=40))
def test_mcnemar_symmetric_and_matches_binomial(pairs):
    from scipy.stats import binomtest

    a = np.array([x for x, _ in pairs])
    b = np.array([y for _, y in pairs])
    p = M.mcnemar(a, b)
    assert p == M.mcnemar(b, a)
    assert 0.0 < p <= 1.0
    nb, nc = int(np.sum(a & ~b)), int(np.sum(~a & b))
    if nb + nc:
        assert p == pytest.approx(binomtest(min(nb, nc), nb + nc, 0.5).pvalue, rel=1e-9)


# --------------------------------------------------------------------------- confusion, views, report


def test_confusion_matrix_and_csv(tmp_path):
    t = ["F0", "F0", "F1", "F2", "F2"]
    p = [0, 0, 0, 1, 1]
    cm = M.confusion_matrix(p, M.map_clusters(p, t), t)
    assert cm.labels == ["F0", "F1", "F2"]
    assert cm.counts.sum() == 5
    assert cm.counts.sum(1).tolist() == [2, 1, 2]
    path = tmp_path / "cm.csv"
    cm.to_csv(path)
    back = M.ConfusionMatrix.from_csv(path)
    assert back.labels == cm.labels and np.array_equal(back.counts, cm.counts)
    perfect = M.confusion_matrix([0, 1], {0: "F0", 1: "F1"}, ["F0", "F1"])
    assert np.array_equal(perfect.counts, np.eye(2, dtype=int))
    path.write_text("a,b\n")
    with pytest.raises(FormatError):
        M.ConfusionMatrix.from_csv(path)


def test_trajectory_consistent_view():
    labels = np.array([0, 0, 1, 2, 2, 2, 3, 4])
    got = M.trajectory_consistent_view(labels, [[0, 1, 2], [3, 4, 5], [6, 7]])
    assert got.tolist() == [0, 0, 0, 2, 2, 2, 3, 3]
    assert labels.tolist() == [0, 0, 1, 2, 2, 2, 3, 4]


def test_evaluate_and_report_roundtrip():
    t = ["F0"] * 6 + ["F1"] * 6
    p = [0] * 5 + [1] * 7
    r = M.evaluate(p, t, B=200, seed=3)
    assert r.accuracy == pytest.approx(11 / 12)
    assert r.ci_accuracy[0] <= r.accuracy <= r.ci_accuracy[1]
    assert r.ci_f1[0] <= r.ci_f1[1]
    assert (r.n, r.clusters, r.bootstrap_B) == (12, 2, 200)
    text = r.to_json({"method": "node2vec"})
    assert '"schema": "floorsep.report/1"' in text and '"method": "node2vec"' in text
    assert M.EvaluationReport.from_json(text) == r
    assert M.evaluate(p, t, B=200, seed=3).to_json() == r.to_json()
    with pytest.raises(FormatError):
        M.EvaluationReport.from_json('{"schema": "other"}')
