"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL|SKIP ...`` line; the lines are
also collected into a summary section at the end of the pytest run.

    pytest tests/test_acceptance.py -v

Criterion 6 needs the Huawei challenge data: point FLOORSEP_HUAWEI_DIR at the
directory holding fingerprints.json, steps.csv and the other files.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, uji_row, write_uji
from floorsep import cli, community, distance, embed, graph, metrics, synth
from floorsep.cluster import KMeansConfig, auto_k, ch_index, dispersion, kmeans
from floorsep.graph import graph_from_edges
from floorsep.ingest import parse_huawei, parse_uji
from test_community import set_partitions
from test_metrics import oracle_ari, oracle_mapping, oracle_nmi, oracle_purity, oracle_weighted_f1

HUAWEI_DIR = os.environ.get("FLOORSEP_HUAWEI_DIR")


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


# --------------------------------------------------------------------------- 1. metric oracles


def test_criterion_1_metric_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 31))
        truth = [f"F{x}" for x in rng.integers(0, int(rng.integers(1, 6)), size=n)]
        pred = rng.integers(0, int(rng.integers(1, 8)), size=n).tolist()
        mapping = metrics.map_clusters(pred, truth)
        assert mapping == oracle_mapping(truth, pred)
        mapped = [mapping[c] for c in pred]
        pairs = [
            (metrics.mapped_accuracy(pred, mapping, truth), sum(a == b for a, b in zip(mapped, truth)) / n),
            (metrics.weighted_f1(pred, mapping, truth), oracle_weighted_f1(mapped, truth)),
            (metrics.ari(truth, pred), oracle_ari(truth, pred)),
            (metrics.nmi(truth, pred), oracle_nmi(truth, pred)),
            (metrics.purity(truth, pred), oracle_purity(truth, pred)),
        ]
        worst = max(worst, max(abs(a - b) for a, b in pairs))
    elapsed = time.perf_counter() - t0
    record(1, worst <= 1e-10 and elapsed < 10, f"max |metric - oracle| = {worst:.1e} over 200 labelings, {elapsed:.2f}s")


# --------------------------------------------------------------------------- 2. SGNS gradients


def test_criterion_2_sgns_gradients():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    h = 1e-4
    worst = 0.0
    for _ in range(50):
        d, k = int(rng.integers(2, 17)), int(rng.integers(1, 6))
        v, uc, un = rng.normal(size=d), rng.normal(size=d), rng.normal(size=(k, d))
        analytic = np.concatenate([g.ravel() for g in embed.sgns_gradients(v, uc, un)])
        numeric = []
        for x in (v, uc, un):
            flat = x.reshape(-1)
            for i in range(flat.size):
                old = flat[i]
                flat[i] = old + h
                fp = embed.sgns_loss(v, uc, un)
                flat[i] = old - h
                fm = embed.sgns_loss(v, uc, un)
                flat[i] = old
                numeric.append((fp - fm) / (2 * h))
        rel = np.linalg.norm(analytic - np.array(numeric)) / max(np.linalg.norm(analytic), 1e-12)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    record(2, worst < 1e-4 and elapsed < 5, f"max relative error {worst:.1e} over 50 instances, {elapsed:.2f}s")


# --------------------------------------------------------------------------- 3. k-means and CH


def test_criterion_3_kmeans_and_ch():
    monotone = True
    for seed in range(100):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(80, 4))
        a = kmeans(X, int(rng.integers(2, 9)), seed=seed, cfg=KMeansConfig(n_init=1))
        monotone &= all(y <= x for x, y in zip(a.inertia_trace, a.inertia_trace[1:]))
    four = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    ch = ch_index(four, [0, 0, 1, 1])
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        X = rng.normal(size=(int(rng.integers(5, 60)), int(rng.integers(1, 6)))) * rng.uniform(0.1, 100)
        labels = rng.integers(0, 4, size=len(X))
        b, w = dispersion(X, labels)
        total = float(((X - X.mean(0)) ** 2).sum())
        worst = max(worst, abs(b + w - total) / total)
    ok = monotone and ch == 200.0 and worst <= 1e-8
    record(3, ok, f"inertia monotone in 100 runs: {monotone}; CH(4-point) = {ch!r}; ANOVA max rel. error {worst:.1e}")


# --------------------------------------------------------------------------- 4 and 5. synthetic family

FAMILY_RUNS = 10
FAMILY_SEED = 1000
# embedding profile for the desk-scale family (see README); the package defaults are heavier
FAMILY_WALK = dict(walks_per_node=10, walk_length=40)
FAMILY_SGNS = dict(window=5, epochs=3)


def family_config(run: int) -> synth.SyntheticBuildingConfig:
    floors = 3 + run % 6
    return synth.SyntheticBuildingConfig(
        floors=floors,
        floor_width=8.0,
        floor_depth=6.0,
        floor_attenuation=15.0,
        noise_sigma=2.0,
        trajectories=10 * floors,
        steps_per_trajectory=30,
        seed=FAMILY_SEED + run,
    )


@pytest.fixture(scope="module")
def family():
    """Auto-k and baseline results for every building of the family, plus the auto-k wall time."""
    results = []
    node2vec_seconds = 0.0
    for run in range(FAMILY_RUNS):
        cfg = family_config(run)
        t0 = time.perf_counter()
        ds = synth.generate(cfg)
        g = graph.build_graph(ds, distance.SignalSource().distances(ds))
        g = graph.ensure_connected(g, ds)
        X = embed.node2vec(g, embed.WalkConfig(seed=cfg.seed, **FAMILY_WALK), embed.SgnsConfig(seed=cfg.seed, **FAMILY_SGNS))
        sweep = auto_k(X, 3, 20, seed=cfg.seed)
        node2vec_seconds += time.perf_counter() - t0
        truth = [ds.ground_truth[i] for i in range(ds.n)]
        labels = sweep.best.labels
        row = {
            "floors": cfg.floors,
            "k_opt": sweep.k_opt,
            "accuracy": metrics.mapped_accuracy(labels, metrics.map_clusters(labels, truth), truth),
            "ari": metrics.ari(truth, labels),
        }
        for name in community.ALGORITHMS:
            row[name] = metrics.ari(truth, community.run_baseline(name, g, seed=cfg.seed).labels)
        print(row)
        results.append(row)
    return results, node2vec_seconds


def test_criterion_4_auto_k_recovery(family):
    rows, seconds = family
    hits = sum(r["k_opt"] == r["floors"] for r in rows)
    picks = " ".join(f"{r['floors']}->{r['k_opt']}" for r in rows)
    record(4, hits >= 9 and seconds < 300, f"k recovered {hits}/{len(rows)} ({picks}) in {seconds:.0f}s")


def test_criterion_5_end_to_end_separation(family):
    rows, _ = family
    min_acc = min(r["accuracy"] for r in rows)
    min_ari = min(r["ari"] for r in rows)
    mean_ari = float(np.mean([r["ari"] for r in rows]))
    gaps = {name: mean_ari - float(np.mean([r[name] for r in rows])) for name in community.ALGORITHMS}
    wide = [name for name, gap in gaps.items() if gap >= 0.15]
    gap_text = ", ".join(f"{k} {v:+.3f}" for k, v in gaps.items())
    ok = min_acc >= 0.95 and min_ari >= 0.90 and len(wide) >= 2
    record(5, ok, f"node2vec min acc {min_acc:.3f}, min ARI {min_ari:.3f}; mean ARI gap to baselines: {gap_text}")


# --------------------------------------------------------------------------- 6. Huawei reproduction


@pytest.mark.skipif(not HUAWEI_DIR, reason="FLOORSEP_HUAWEI_DIR not set")
def test_criterion_6_huawei(tmp_path):
    base = dict(dataset="huawei", data_path=HUAWEI_DIR, algorithms=list(cli.METHODS))
    wbde = cli.run_pipeline(cli.RunConfig(scenario="HW-WBDE", distance_source="signal", **base), tmp_path / "wbde")
    default = cli.run_pipeline(cli.RunConfig(scenario="HW-Def", distance_source="provided", **base), tmp_path / "def")
    acc = {m: r.accuracy for m, (_, r) in wbde.items()}
    beats = all(acc["node2vec"] > acc[m] for m in community.ALGORITHMS)
    overseg = {m: (default[m][1].purity, default[m][1].ari) for m in ("louvain", "leiden", "fast_greedy")}
    ok = acc["node2vec"] >= 0.60 and beats and all(p >= 0.80 and a <= 0.10 for p, a in overseg.values())
    text = ", ".join(f"{m} purity {p:.3f} ARI {a:.3f}" for m, (p, a) in overseg.items())
    record(6, ok, f"HW-WBDE node2vec acc {acc['node2vec']:.3f} (beats all baselines: {beats}); HW-Def {text}")


def test_criterion_6_skip_line():
    if not HUAWEI_DIR:
        line = "criterion 6: SKIP  Huawei data not present (set FLOORSEP_HUAWEI_DIR)"
        print(line)
        ACCEPTANCE_LINES.append(line)


# --------------------------------------------------------------------------- 7. statistics


def test_criterion_7_statistics():
    flags = np.random.default_rng(7).permutation(np.repeat([0, 1], 500))
    _, lo, hi = metrics.bootstrap_ci(flags, B=1000, level=0.95, seed=0)
    theory = 2 * 1.959964 * math.sqrt(0.25 / 1000)
    width_ok = abs((hi - lo) - theory) <= 0.3 * theory
    a = np.ones(10, dtype=bool)
    p = metrics.mcnemar(a, ~a)
    same = metrics.mcnemar(flags, flags)
    # 0.00195 is the rounded form of the exact tail 2 * 0.5**10 = 0.001953125
    ok = width_ok and abs(p - 2 * 0.5**10) <= 1e-6 and same == 1.0
    record(7, ok, f"bootstrap width {hi - lo:.4f} vs theory {theory:.4f}; McNemar(10, 0) = {p:.9f}; identical p = {same}")


# --------------------------------------------------------------------------- 8. determinism


def test_criterion_8_determinism(tmp_path):
    cfg = {
        "scenario": "SYNTH",
        "synth": {"floors": 3, "floor_width": 8, "floor_depth": 6, "trajectories": 15, "steps_per_trajectory": 20},
        "walks_per_node": 4, "walk_length": 30, "window": 5, "epochs": 2, "k_max": 8, "bootstrap_B": 200,
        "algorithms": list(cli.METHODS), "seed": 11,
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    for out in ("a", "b"):
        assert cli.main(["pipeline", "--config", str(path), "--out", str(tmp_path / out)]) == 0
    compared, differing = 0, []
    for d in sorted((tmp_path / "a").iterdir()):
        for name in ("report.json", "partition.csv", "embeddings.txt"):
            f = d / name
            if f.exists():
                compared += 1
                if f.read_bytes() != (tmp_path / "b" / d.name / name).read_bytes():
                    differing.append(f"{d.name}/{name}")
    record(8, compared == 11 and not differing, f"{compared} artifacts compared byte-for-byte, differing: {differing or 'none'}")


# --------------------------------------------------------------------------- 9. community quality


def test_criterion_9_community_quality():
    import networkx as nx

    rng = np.random.default_rng(9)
    close = {m: 0 for m in ("louvain", "leiden", "fast_greedy")}
    leiden_connected = True
    for t in range(50):
        n = int(rng.integers(3, 9))
        edges = [(i, j, float(rng.uniform(0.1, 1.0))) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
        edges = edges or [(0, 1, 1.0)]
        g = graph_from_edges(n, edges)
        best = max(community.modularity(g, p) for p in set_partitions(n))
        G = nx.Graph()
        G.add_nodes_from(range(n))
        G.add_weighted_edges_from(edges)
        for m in close:
            part = community.run_baseline(m, g, seed=t)
            close[m] += community.modularity(g, part) >= best - 0.05
            if m == "leiden":
                leiden_connected &= all(nx.is_connected(G.subgraph(c)) for c in part.communities())
    ok = all(v >= 45 for v in close.values()) and leiden_connected
    text = ", ".join(f"{m} {v}/50" for m, v in close.items())
    record(9, ok, f"within 0.05 of optimum: {text}; Leiden communities connected: {leiden_connected}")


# --------------------------------------------------------------------------- 10. format round trips


def _shape(ds, key):
    return sorted(tuple(key(ds, i) for i in t.fingerprint_ids) for t in ds.trajectories)


def test_criterion_10_round_trips(tmp_path):
    ds = synth.generate(synth.SyntheticBuildingConfig(floors=4, trajectories=16, steps_per_trajectory=12, seed=10))
    synth.write_huawei_format(ds, tmp_path / "hw")
    hw = parse_huawei(tmp_path / "hw")
    back = {s: i for i, s in enumerate(hw.source_ids)}
    hw_ok = (
        hw.n == ds.n
        and all(hw.ground_truth[back[str(i)]] == ds.ground_truth[i] for i in range(ds.n))
        and _shape(hw, lambda d, i: int(d.source_ids[i])) == _shape(ds, lambda d, i: i)
    )
    synth.write_uji_format(ds, tmp_path / "uji.csv")
    uji = parse_uji(tmp_path / "uji.csv")

    def sig(d, i):
        return (d.ground_truth[i], tuple(sorted(d.fingerprints[i].rssi.values())))

    uji_ok = uji.n == ds.n and _shape(uji, sig) == _shape(ds, sig)

    rows = [
        uji_row({0: -50}, 0),
        uji_row({0: -51}, 600),  # exactly the threshold: same trajectory
        uji_row({0: -52}, 1201),  # 601 s later: new trajectory
        uji_row({}, 1210),  # every WAP at the sentinel: dropped
        uji_row({0: -53, 4: -70}, 1220),
    ]
    edge = parse_uji(write_uji(tmp_path / "edge.csv", rows))
    edge_ok = (
        edge.n == 4
        and sorted(len(t.fingerprint_ids) for t in edge.trajectories) == [2, 2]
        and all(100 not in fp.rssi.values() for fp in edge.fingerprints)
    )
    record(10, hw_ok and uji_ok and edge_ok, f"Huawei round trip {hw_ok}, UJI round trip {uji_ok}, UJI edge cases {edge_ok}")
