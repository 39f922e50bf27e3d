"""Auto-k recovery and baseline gap over a family of synthetic buildings.

Each run draws a building with 3..8 floors (cycling), about 300 fingerprints per
floor on an 8 m x 6 m plan, builds the signal-distance trajectory graph, embeds
it, and selects k by the CH index. Optionally the community baselines are
scored on the same graph. The defaults are the profile the acceptance tests use.

    python scripts/synthetic_sweep.py --runs 10 --baselines
    python scripts/synthetic_sweep.py --set floor_width=20 --set floor_depth=15 --walk-length 80
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from floorsep import community, distance, embed, graph, metrics, synth
from floorsep.cluster import auto_k


def family_config(run: int, seed0: int, overrides: dict, steps: int = 30, per_floor: int = 300) -> synth.SyntheticBuildingConfig:
    floors = 3 + run % 6
    base = dict(
        floors=floors,
        floor_width=8.0,
        floor_depth=6.0,
        trajectories=floors * per_floor // steps,
        steps_per_trajectory=steps,
        seed=seed0 + run,
    )
    base.update(overrides)
    return synth.SyntheticBuildingConfig(**base)


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=1000)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="synthetic config override")
    ap.add_argument("--steps", type=int, default=30, help="steps per trajectory")
    ap.add_argument("--per-floor", type=int, default=300, help="fingerprints per floor")
    ap.add_argument("--knn-m", type=int, default=10)
    ap.add_argument("--walks-per-node", type=int, default=10)
    ap.add_argument("--walk-length", type=int, default=40)
    ap.add_argument("--window", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=3)
    ap.add_argument("--p", type=float, default=1.0)
    ap.add_argument("--q", type=float, default=1.0)
    ap.add_argument("--baselines", action="store_true")
    args = ap.parse_args(argv)
    overrides = {k: _value(v) for k, v in (s.split("=", 1) for s in args.set)}

    t_all = time.perf_counter()
    hits = 0
    for run in range(args.runs):
        t0 = time.perf_counter()
        cfg = family_config(run, args.seed, overrides, args.steps, args.per_floor)
        ds = synth.generate(cfg)
        src = distance.SignalSource(pairs=distance.PairPolicy(knn_m=args.knn_m))
        g = graph.ensure_connected(graph.build_graph(ds, src.distances(ds)), ds)
        truth = [ds.ground_truth[i] for i in range(ds.n)]
        walk = embed.WalkConfig(args.p, args.q, args.walks_per_node, args.walk_length, cfg.seed)
        sgns = embed.SgnsConfig(window=args.window, epochs=args.epochs, seed=cfg.seed)
        X = embed.node2vec(g, walk, sgns)
        sweep = auto_k(X, seed=cfg.seed)
        labels = sweep.best.labels
        acc = metrics.mapped_accuracy(labels, metrics.map_clusters(labels, truth), truth)
        hits += sweep.k_opt == cfg.floors
        ch = {k: v for k, v, _ in sweep.entries}
        runner_up = max((v, k) for k, v in ch.items() if k != sweep.k_opt)
        line = (
            f"floors {cfg.floors} n {ds.n} k_opt {sweep.k_opt} acc {acc:.3f} ari {metrics.ari(truth, labels):.3f} "
            f"ch {ch[sweep.k_opt]:.0f} runner-up k={runner_up[1]} ({runner_up[0]:.0f})"
        )
        if args.baselines:
            for name in community.ALGORITHMS:
                part = community.run_baseline(name, g, cfg.seed)
                line += f" | {name} ari {metrics.ari(truth, part.labels):.3f} c={part.count}"
        print(line + f"  [{time.perf_counter() - t0:.0f}s]", flush=True)
    print(f"k recovered {hits}/{args.runs} in {time.perf_counter() - t_all:.0f}s")


if __name__ == "__main__":
    main()
