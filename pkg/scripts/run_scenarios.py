"""Run the evaluation scenarios and compare every method within each one.

SYNTH always runs. Huawei scenarios need --huawei (the challenge directory);
UJI scenarios need --uji-train and/or --uji-val (the two CSV files).

    python scripts/run_scenarios.py --out runs
    python scripts/run_scenarios.py --huawei data/huawei --uji-train data/trainingData.csv --out runs
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from floorsep import cli


def scenarios(args) -> list[dict]:
    todo = [{"scenario": "SYNTH", "synth": json.loads(args.synth)}]
    if args.huawei:
        todo += [{"scenario": s, "data_path": args.huawei} for s in ("HW-Def", "HW-WBDE")]
    if args.uji_train:
        todo += [{"scenario": s, "data_path": args.uji_train} for s in ("UJI-Geo-T", "UJI-WBDE-T")]
    if args.uji_val:
        todo += [{"scenario": s, "data_path": args.uji_val} for s in ("UJI-Geo-V", "UJI-WBDE-V")]
    return todo


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--huawei")
    ap.add_argument("--uji-train")
    ap.add_argument("--uji-val")
    ap.add_argument("--synth", default='{"floors": 5, "floor_width": 8, "floor_depth": 6, "trajectories": 50}',
                    help="synthetic building config as JSON")
    ap.add_argument("--config", help="JSON with shared overrides (embedding profile, bootstrap B, ...)")
    args = ap.parse_args(argv)
    shared = json.loads(Path(args.config).read_text()) if args.config else {}

    out = Path(args.out)
    for item in scenarios(args):
        kind, source = cli.SCENARIOS[item["scenario"]]
        data = {**shared, **item, "dataset": kind, "algorithms": list(cli.METHODS), "seed": args.seed}
        if source is not None:
            data["distance_source"] = source
        cfg = cli.RunConfig.from_dict(data)
        print(f"== {cfg.scenario}", flush=True)
        results = cli.run_pipeline(cfg, out / cfg.scenario)
        for method, (run_dir, r) in results.items():
            print(f"  {method:<18} acc {r.accuracy:.3f} [{r.ci_accuracy[0]:.3f}, {r.ci_accuracy[1]:.3f}]  "
                  f"f1 {r.f1_weighted:.3f}  ari {r.ari:.3f}  nmi {r.nmi:.3f}  purity {r.purity:.3f}")
        cli.compare_runs([d for d, _ in results.values()], out / cfg.scenario / "comparison")


if __name__ == "__main__":
    main()
