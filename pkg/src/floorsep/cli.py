"""Command-line entry point: ``floorsep <subcommand>``.

Every run writes into ``<out>/<scenario>-<algorithm>-<hash>/`` where the hash
covers the full resolved configuration. All randomness derives from the single
``--seed`` through named substreams, and no file contains a timestamp, so the
same configuration reproduces every artifact byte for byte.

Exit codes:
  0  success
  1  unexpected internal error
  2  invalid arguments or configuration
  3  ingest failed
  4  distance estimation failed
  5  graph construction failed
  6  embedding failed
  7  clustering failed
  8  community baseline failed
  9  evaluation failed
  10 comparison failed
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, community, distance, embed, graph, ingest, metrics, synth
from .cluster import KMeansConfig, auto_k, write_sweep_csv
from .errors import ConfigurationError, FloorsepError

EXIT_CODES = {
    "config": 2,
    "ingest": 3,
    "distance": 4,
    "graph": 5,
    "embed": 6,
    "cluster": 7,
    "baseline": 8,
    "eval": 9,
    "compare": 10,
}

# scenario -> (dataset kind, distance source); None accepts any source
SCENARIOS = {
    "HW-Def": ("huawei", "provided"),
    "HW-WBDE": ("huawei", "signal"),
    "UJI-Geo-T": ("uji", "geometric"),
    "UJI-Geo-V": ("uji", "geometric"),
    "UJI-WBDE-T": ("uji", "signal"),
    "UJI-WBDE-V": ("uji", "signal"),
    "SYNTH": ("synth", None),
}

METHODS = ("node2vec",) + community.ALGORITHMS
SEED_STREAMS = ("walks", "sgns", "kmeans", "lpa", "louvain", "leiden", "bootstrap")


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.code = EXIT_CODES.get(stage, 1)


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (FloorsepError, OSError, ValueError, KeyError) as exc:
        raise StageError(name, exc) from exc


def substream(seed: int, name: str) -> int:
    """Independent 63-bit seed for a named consumer of randomness."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


# --------------------------------------------------------------------------- configuration


@dataclass
class RunConfig:
    scenario: str = "SYNTH"
    dataset: str = "synth"
    data_path: str | None = None
    distance_source: str = "signal"
    p0: float = -40.0
    gamma: float = 3.0
    d_max: float = 50.0
    knn_m: int = 10
    elevation_policy: str = "exclude"
    walks_per_node: int = 10
    walk_length: int = 80
    p: float = 1.0
    q: float = 1.0
    dim: int = 32
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    k_min: int = 3
    k_max: int = 20
    algorithms: list[str] = field(default_factory=lambda: ["node2vec"])
    seed: int = 0
    bootstrap_B: int = 1000
    level: float = 0.95
    resample_unit: str = "fingerprint"
    trajectory_consistent: bool = False
    uji_delta_t: float = 600.0
    synth: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}; choose from {sorted(SCENARIOS)}")
        kind, source = SCENARIOS[self.scenario]
        if self.dataset != kind:
            raise ConfigurationError(f"scenario {self.scenario} needs a {kind} dataset, got {self.dataset}")
        if self.distance_source not in distance.DISTANCE_SOURCES:
            raise ConfigurationError(f"unknown distance source {self.distance_source!r}")
        if source is not None and self.distance_source != source:
            raise ConfigurationError(
                f"scenario {self.scenario} uses {source} distances, not {self.distance_source}"
            )
        if kind != "synth" and not self.data_path:
            raise ConfigurationError(f"scenario {self.scenario} needs --data")
        unknown = [a for a in self.algorithms if a not in METHODS]
        if unknown or not self.algorithms:
            raise ConfigurationError(f"unknown algorithms {unknown}; choose from {list(METHODS)}")
        if self.resample_unit not in ("fingerprint", "trajectory"):
            raise ConfigurationError("resample_unit must be fingerprint or trajectory")
        # constructing the module configs runs their own checks
        self.graph_config()
        self.walk_config()
        self.sgns_config()
        self.synth_config()
        distance.SignalHeuristic(self.p0, self.gamma, self.d_max)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def digest(self, extra: dict | None = None) -> str:
        # the method list only selects runs; it does not change any one run's output
        doc = {k: v for k, v in self.to_dict().items() if k != "algorithms"}
        doc.update(extra or {})
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:12]

    def heuristic(self) -> distance.SignalHeuristic:
        return distance.SignalHeuristic(self.p0, self.gamma, self.d_max)

    def graph_config(self) -> graph.GraphConfig:
        return graph.GraphConfig(elevation_policy=self.elevation_policy, d_max=self.d_max)

    def walk_config(self) -> embed.WalkConfig:
        return embed.WalkConfig(self.p, self.q, self.walks_per_node, self.walk_length, substream(self.seed, "walks"))

    def sgns_config(self) -> embed.SgnsConfig:
        return embed.SgnsConfig(
            dim=self.dim, window=self.window, negatives=self.negatives, epochs=self.epochs,
            seed=substream(self.seed, "sgns"),
        )

    def synth_config(self) -> synth.SyntheticBuildingConfig:
        data = dict(self.synth)
        data.setdefault("seed", self.seed)
        try:
            return synth.SyntheticBuildingConfig(**data)
        except TypeError as exc:
            raise ConfigurationError(f"bad synthetic config: {exc}") from exc

    def seeds(self) -> dict[str, int]:
        return {name: substream(self.seed, name) for name in SEED_STREAMS}


# --------------------------------------------------------------------------- stages


def load_input(cfg: RunConfig) -> ingest.RawDataset:
    with stage("ingest"):
        if cfg.dataset == "synth":
            return synth.generate(cfg.synth_config())
        if cfg.dataset == "uji":
            return ingest.parse_uji(cfg.data_path, cfg.uji_delta_t)
        return ingest.parse_huawei(cfg.data_path)


def build(cfg: RunConfig, ds: ingest.RawDataset) -> graph.TrajectoryGraph:
    with stage("distance"):
        source = distance.make_source(cfg.distance_source, distance.PairPolicy(knn_m=cfg.knn_m), cfg.heuristic())
        dists = source.distances(ds)
    with stage("graph"):
        g = graph.build_graph(ds, dists, cfg.graph_config())
        return graph.ensure_connected(g, ds, cfg.graph_config(), cfg.heuristic())


def partition_with(method: str, cfg: RunConfig, g: graph.TrajectoryGraph, run_dir: Path | None = None):
    """Labels for one method, plus k_opt for node2vec (None for baselines)."""
    if method == "node2vec":
        with stage("embed"):
            X = embed.node2vec(g, cfg.walk_config(), cfg.sgns_config())
            if run_dir is not None:
                embed.write_embeddings(X, run_dir / "embeddings.txt")
        with stage("cluster"):
            k_max = min(cfg.k_max, g.n - 1)
            sweep = auto_k(X, cfg.k_min, k_max, substream(cfg.seed, "kmeans"), KMeansConfig())
            if run_dir is not None:
                write_sweep_csv(sweep, run_dir / "sweep.csv")
            return sweep.best.labels, sweep.k_opt
    with stage("baseline"):
        stream = {"label_propagation": "lpa"}.get(method, method)
        return community.run_baseline(method, g, substream(cfg.seed, stream)).labels, None


def evaluate_labels(cfg: RunConfig, ds: ingest.RawDataset, labels) -> metrics.EvaluationReport:
    with stage("eval"):
        if ds.ground_truth is None:
            raise ConfigurationError("dataset has no ground truth to evaluate against")
        if cfg.trajectory_consistent:
            labels = metrics.trajectory_consistent_view(labels, ds.trajectories)
        groups = None
        if cfg.resample_unit == "trajectory":
            groups = np.array([fp.trajectory_id for fp in ds.fingerprints])
        return metrics.evaluate(
            labels, ds.ground_truth, cfg.bootstrap_B, cfg.level, substream(cfg.seed, "bootstrap"), groups
        )


def write_predictions(path: Path, labels, ds: ingest.RawDataset) -> None:
    mapping = metrics.map_clusters(labels, ds.ground_truth)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "cluster", "predicted", "truth", "correct"])
        for i, c in enumerate(np.asarray(labels).tolist()):
            pred, true = mapping[c], ds.ground_truth[i]
            w.writerow([i, c, pred, true, int(pred == true)])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_method(cfg: RunConfig, method: str, ds, g, out: Path) -> tuple[Path, metrics.EvaluationReport]:
    run_dir = out / f"{cfg.scenario}-{method}-{cfg.digest({'method': method})}"
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    graph.write_edgelist(g, run_dir / "graph.edgelist")
    labels, k_opt = partition_with(method, cfg, g, run_dir)
    community.write_partition_csv(labels, run_dir / "partition.csv")
    report = evaluate_labels(cfg, ds, labels)
    with stage("eval"):
        extra = {"method": method, "scenario": cfg.scenario, "k_opt": k_opt}
        (run_dir / "report.json").write_text(report.to_json(extra), encoding="utf-8")
        mapping = metrics.map_clusters(labels, ds.ground_truth)
        metrics.confusion_matrix(labels, mapping, ds.ground_truth).to_csv(run_dir / "confusion.csv")
        write_predictions(run_dir / "predictions.csv", labels, ds)
    manifest = {
        "version": __version__,
        "method": method,
        "config": cfg.to_dict(),
        "config_hash": cfg.digest({"method": method}),
        "seeds": cfg.seeds(),
        "artifacts": {p.name: _sha256(p) for p in sorted(run_dir.iterdir()) if p.name != "manifest.json"},
    }
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return run_dir, report


def run_pipeline(cfg: RunConfig, out) -> dict[str, tuple[Path, metrics.EvaluationReport]]:
    """ingest -> distances -> graph -> (node2vec + auto-k | baseline) -> eval, per selected method."""
    with stage("config"):
        cfg.validate()
    out = Path(out)
    ds = load_input(cfg)
    g = build(cfg, ds)
    return {m: run_method(cfg, m, ds, g, out) for m in cfg.algorithms}


def compare_runs(run_dirs, out) -> tuple[list[dict], list[list[float]]]:
    """Metric table and pairwise McNemar p-values for runs on the same dataset."""
    if len(run_dirs) < 2:
        raise ConfigurationError("compare needs at least two run directories")
    rows, flags, names = [], [], []
    truth_ref = None
    for d in map(Path, run_dirs):
        report = json.loads((d / "report.json").read_text(encoding="utf-8"))
        with open(d / "predictions.csv", encoding="utf-8", newline="") as fh:
            preds = list(csv.DictReader(fh))
        truth = [(r["node_id"], r["truth"]) for r in preds]
        if truth_ref is None:
            truth_ref = truth
        elif truth != truth_ref:
            raise ConfigurationError(f"{d} was evaluated on a different node set or ground truth")
        name = f"{report.get('scenario', '')}:{report.get('method', d.name)}"
        if name in names:
            name = f"{name}#{sum(x.split('#')[0] == name for x in names) + 1}"
        names.append(name)
        flags.append(np.array([int(r["correct"]) for r in preds], dtype=bool))
        rows.append(
            {
                "run": name,
                "dir": d.name,
                **{k: report[k] for k in ("accuracy", "f1_weighted", "ari", "nmi", "purity")},
                "ci_accuracy_lo": report["ci_accuracy"][0],
                "ci_accuracy_hi": report["ci_accuracy"][1],
                "ci_f1_lo": report["ci_f1"][0],
                "ci_f1_hi": report["ci_f1"][1],
            }
        )
    pvals = [[metrics.mcnemar(a, b) for b in flags] for a in flags]
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    with open(out / "mcnemar.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", *names])
        for name, row in zip(names, pvals):
            w.writerow([name, *map(repr, row)])
    return rows, pvals


# --------------------------------------------------------------------------- argument parsing

# flag name -> RunConfig field, for flags that override the config file only when given
_OVERRIDES = {
    "scenario": "scenario", "dataset": "dataset", "data": "data_path", "distance_source": "distance_source",
    "p0": "p0", "gamma": "gamma", "dmax": "d_max", "knn_m": "knn_m", "elevation_policy": "elevation_policy",
    "walks_per_node": "walks_per_node", "walk_length": "walk_length", "p": "p", "q": "q", "dim": "dim",
    "window": "window", "negatives": "negatives", "epochs": "epochs", "k_min": "k_min", "k_max": "k_max",
    "seed": "seed", "bootstrap": "bootstrap_B", "level": "level", "resample_unit": "resample_unit",
    "delta_t": "uji_delta_t",
}


def _add_data_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("dataset")
    g.add_argument("--scenario", choices=sorted(SCENARIOS))
    g.add_argument("--dataset", choices=["huawei", "uji", "synth"])
    g.add_argument("--data", help="Huawei directory or UJI CSV")
    g.add_argument("--floors", type=int, help="synthetic building floors")
    g.add_argument("--delta-t", type=float, help="UJI trajectory gap in seconds")


def _add_distance_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("distances and graph")
    g.add_argument("--distance-source", choices=distance.DISTANCE_SOURCES)
    g.add_argument("--p0", type=float, help="reference RSSI at 1 m (dBm)")
    g.add_argument("--gamma", type=float, help="path-loss exponent")
    g.add_argument("--dmax", type=float, help="distance cap and no-shared-AP value (m)")
    g.add_argument("--knn-m", type=int, help="signal-space neighbours per fingerprint")
    g.add_argument("--elevation-policy", choices=["exclude", "include"])


def _add_embed_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("node2vec")
    for flag, typ in [
        ("--walks-per-node", int), ("--walk-length", int), ("--p", float), ("--q", float),
        ("--dim", int), ("--window", int), ("--negatives", int), ("--epochs", int),
    ]:
        g.add_argument(flag, type=typ)


def _add_cluster_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)


def _add_eval_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("evaluation")
    g.add_argument("--bootstrap", type=int, help="bootstrap resamples")
    g.add_argument("--level", type=float)
    g.add_argument("--resample-unit", choices=["fingerprint", "trajectory"])
    g.add_argument("--trajectory-consistent", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floorsep", description="Unsupervised floor separation from Wi-Fi trajectories.")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="top-level seed (default 0)")
    common.add_argument("--out", default="runs", help="output directory")
    common.add_argument("--config", help="JSON run configuration; explicit flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse a dataset and print its summary")
    _add_data_args(p)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic building")
    p.add_argument("--floors", type=int)
    p.add_argument("--synth-config", help="JSON synthetic-building configuration")
    p.add_argument("--format", choices=["huawei", "uji"], default="huawei")

    p = sub.add_parser("graph", parents=[common], help="estimate distances and build the trajectory graph")
    _add_data_args(p)
    _add_distance_args(p)

    p = sub.add_parser("embed", parents=[common], help="Node2Vec embeddings of an edge-list graph")
    p.add_argument("--graph", required=True)
    _add_embed_args(p)

    p = sub.add_parser("cluster", parents=[common], help="k-means with CH selection of k")
    p.add_argument("--embeddings", required=True)
    _add_cluster_args(p)

    p = sub.add_parser("baseline", parents=[common], help="community-detection baseline on an edge-list graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--algorithm", choices=community.ALGORITHMS, required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate a partition against ground truth")
    p.add_argument("--partition", required=True)
    _add_data_args(p)
    _add_eval_args(p)

    p = sub.add_parser("compare", parents=[common], help="metric table and McNemar matrix over run directories")
    p.add_argument("runs", nargs="+")

    p = sub.add_parser("pipeline", parents=[common], help="full run: ingest to report")
    _add_data_args(p)
    _add_distance_args(p)
    _add_embed_args(p)
    _add_cluster_args(p)
    _add_eval_args(p)
    p.add_argument("--algorithms", help=f"comma-separated subset of {','.join(METHODS)} or 'all'")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    cfg = RunConfig.from_dict(data)
    updates = {}
    for flag, name in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            updates[name] = value
    if getattr(args, "trajectory_consistent", None):
        updates["trajectory_consistent"] = True
    if getattr(args, "floors", None) is not None:
        updates["synth"] = dict(cfg.synth, floors=args.floors)
    algos = getattr(args, "algorithms", None)
    if algos:
        updates["algorithms"] = list(METHODS) if algos == "all" else [a.strip() for a in algos.split(",")]
    cfg = replace(cfg, **updates)
    # a scenario without an explicit dataset implies the dataset kind
    if "scenario" in updates and "dataset" not in updates and "dataset" not in data:
        cfg = replace(cfg, dataset=SCENARIOS[cfg.scenario][0])
    if "scenario" in updates and "distance_source" not in updates and "distance_source" not in data:
        cfg = replace(cfg, distance_source=SCENARIOS[cfg.scenario][1] or cfg.distance_source)
    return cfg


def _cmd_ingest(cfg: RunConfig, args) -> int:
    ds = load_input(cfg)
    print(json.dumps(asdict(ingest.dataset_summary(ds)), indent=2, sort_keys=True))
    return 0


def _cmd_synth(cfg: RunConfig, args) -> int:
    with stage("config"):
        data = dict(cfg.synth)
        if args.synth_config:
            data.update(json.loads(Path(args.synth_config).read_text(encoding="utf-8")))
        if args.floors is not None:
            data["floors"] = args.floors
        scfg = replace(cfg, synth=data).synth_config()
    with stage("ingest"):
        ds = synth.generate(scfg)
        out = Path(args.out)
        if args.format == "huawei":
            synth.write_huawei_format(ds, out)
        else:
            out.mkdir(parents=True, exist_ok=True)
            synth.write_uji_format(ds, out / "synthetic_uji.csv")
    print(f"wrote {ds.n} fingerprints in {len(ds.trajectories)} trajectories to {out}")
    return 0


def _cmd_graph(cfg: RunConfig, args) -> int:
    with stage("config"):
        cfg.validate()
    ds = load_input(cfg)
    g = build(cfg, ds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with stage("graph"):
        graph.write_edgelist(g, out / "graph.edgelist")
        stats = graph.graph_stats(g)
    print(json.dumps(asdict(stats), indent=2, sort_keys=True))
    return 0


def _cmd_embed(cfg: RunConfig, args) -> int:
    with stage("embed"):
        g = graph.read_edgelist(args.graph)
        X = embed.node2vec(g, cfg.walk_config(), cfg.sgns_config())
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        embed.write_embeddings(X, out / "embeddings.txt")
    return 0


def _cmd_cluster(cfg: RunConfig, args) -> int:
    with stage("cluster"):
        X = embed.read_embeddings(args.embeddings)
        sweep = auto_k(X, cfg.k_min, min(cfg.k_max, X.shape[0] - 1), substream(cfg.seed, "kmeans"))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(sweep, out / "sweep.csv")
        community.write_partition_csv(sweep.best.labels, out / "partition.csv")
    print(f"k_opt {sweep.k_opt}")
    return 0


def _cmd_baseline(cfg: RunConfig, args) -> int:
    with stage("baseline"):
        g = graph.read_edgelist(args.graph)
        stream = {"label_propagation": "lpa"}.get(args.algorithm, args.algorithm)
        part = community.run_baseline(args.algorithm, g, substream(cfg.seed, stream))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        community.write_partition_csv(part, out / "partition.csv")
    print(f"{args.algorithm}: {part.count} communities")
    return 0


def _cmd_eval(cfg: RunConfig, args) -> int:
    ds = load_input(cfg)
    with stage("eval"):
        labels = community.read_partition_csv(args.partition)
        if len(labels) != ds.n:
            raise ConfigurationError(f"partition has {len(labels)} nodes, dataset has {ds.n}")
    report = evaluate_labels(cfg, ds, labels)
    with stage("eval"):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        mapping = metrics.map_clusters(labels, ds.ground_truth)
        metrics.confusion_matrix(labels, mapping, ds.ground_truth).to_csv(out / "confusion.csv")
        write_predictions(out / "predictions.csv", labels, ds)
    print(report.to_json(), end="")
    return 0


def _cmd_compare(cfg: RunConfig, args) -> int:
    with stage("compare"):
        rows, _ = compare_runs(args.runs, args.out)
    for r in rows:
        print(f"{r['run']:<32} acc {r['accuracy']:.3f}  f1 {r['f1_weighted']:.3f}  ari {r['ari']:.3f}  "
              f"nmi {r['nmi']:.3f}  purity {r['purity']:.3f}")
    return 0


def _cmd_pipeline(cfg: RunConfig, args) -> int:
    results = run_pipeline(cfg, args.out)
    for method, (run_dir, report) in results.items():
        print(f"{method:<18} acc {report.accuracy:.3f} [{report.ci_accuracy[0]:.3f}, {report.ci_accuracy[1]:.3f}]  "
              f"ari {report.ari:.3f}  nmi {report.nmi:.3f}  purity {report.purity:.3f}  -> {run_dir}")
    return 0


COMMANDS = {
    "ingest": _cmd_ingest, "synth": _cmd_synth, "graph": _cmd_graph, "embed": _cmd_embed,
    "cluster": _cmd_cluster, "baseline": _cmd_baseline, "eval": _cmd_eval, "compare": _cmd_compare,
    "pipeline": _cmd_pipeline,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with stage("config"):
            cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except StageError as exc:
        print(f"floorsep: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
