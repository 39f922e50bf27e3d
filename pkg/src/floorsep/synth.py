"""Synthetic multistory buildings with known floor labels.

APs sit at random positions on every floor. Pedestrians take bounded random
walks on one floor; an elevator trajectory changes floor once, and the two
fingerprints around the jump form an elevation pair. RSSI follows a
log-distance path-loss model with a per-floor attenuation term and Gaussian
noise.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .ingest import UJI_COLUMNS, UJI_MISSING, UJI_NUM_WAPS, RawDataset, assemble_dataset


@dataclass(frozen=True)
class SyntheticBuildingConfig:
    floors: int = 5
    floor_width: float = 40.0
    floor_depth: float = 30.0
    floor_height: float = 3.0
    aps_per_floor: int = 8
    path_loss_exponent: float = 3.0
    tx_power: float = -40.0
    floor_attenuation: float = 15.0
    noise_sigma: float = 2.0
    detection_threshold: float = -95.0
    trajectories: int = 50
    steps_per_trajectory: int = 30
    step_length: float = 1.5
    elevator_prob: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.floors < 2:
            raise ConfigurationError("floors must be at least 2")
        for name in ("aps_per_floor", "trajectories", "steps_per_trajectory"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        for name in ("floor_width", "floor_depth", "floor_height", "step_length", "path_loss_exponent"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.noise_sigma < 0 or self.floor_attenuation < 0:
            raise ConfigurationError("noise_sigma and floor_attenuation must be non-negative")
        if not 0.0 <= self.elevator_prob <= 1.0:
            raise ConfigurationError("elevator_prob must lie in [0, 1]")

    @classmethod
    def from_file(cls, path) -> "SyntheticBuildingConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown synthetic config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def floor_label(floor: int) -> str:
    return f"B0-F{floor}"


def mean_rssi(distance_3d, floors_crossed, cfg: SyntheticBuildingConfig):
    """Noise-free received power in dBm; distances below 1 m count as 1 m."""
    d = np.maximum(np.asarray(distance_3d, dtype=np.float64), 1.0)
    return cfg.tx_power - 10.0 * cfg.path_loss_exponent * np.log10(d) - cfg.floor_attenuation * np.abs(floors_crossed)


def _walk(rng, start, steps, cfg):
    pts = [start]
    heading = rng.uniform(0, 2 * math.pi)
    x, y = start
    for _ in range(steps - 1):
        heading += rng.normal(0.0, 0.6)
        nx = x + cfg.step_length * math.cos(heading)
        ny = y + cfg.step_length * math.sin(heading)
        # reflect off the walls
        if not 0.0 <= nx <= cfg.floor_width:
            heading = math.pi - heading
            nx = min(max(nx, 0.0), cfg.floor_width)
        if not 0.0 <= ny <= cfg.floor_depth:
            heading = -heading
            ny = min(max(ny, 0.0), cfg.floor_depth)
        x, y = nx, ny
        pts.append((x, y))
    return pts


def generate(cfg: SyntheticBuildingConfig | None = None) -> RawDataset:
    cfg = cfg or SyntheticBuildingConfig()
    rng = np.random.default_rng(cfg.seed)
    ap_xy = rng.uniform([0, 0], [cfg.floor_width, cfg.floor_depth], size=(cfg.floors, cfg.aps_per_floor, 2))
    ap_pos = np.concatenate(
        [np.column_stack([ap_xy[f], np.full(cfg.aps_per_floor, f * cfg.floor_height)]) for f in range(cfg.floors)]
    )
    ap_floor = np.repeat(np.arange(cfg.floors), cfg.aps_per_floor)

    rssi_maps: list[dict] = []
    floors: list[int] = []
    coords: list[tuple[float, float]] = []
    chains: list[list[int]] = []
    elevation: list[tuple[int, int]] = []

    def record(x, y, f):
        pos = np.array([x, y, f * cfg.floor_height])
        d = np.sqrt(((ap_pos - pos) ** 2).sum(1))
        level = mean_rssi(d, ap_floor - f, cfg) + rng.normal(0.0, cfg.noise_sigma, size=len(d))
        level = np.maximum(level, -100.0)
        rssi = {f"AP{j:04d}": int(round(v)) for j, v in enumerate(level) if v >= cfg.detection_threshold}
        rssi_maps.append(rssi)
        floors.append(f)
        coords.append((x, y))
        return len(rssi_maps) - 1

    for t in range(cfg.trajectories):
        floor = t % cfg.floors
        start = tuple(rng.uniform([0, 0], [cfg.floor_width, cfg.floor_depth]))
        pts = _walk(rng, start, cfg.steps_per_trajectory, cfg)
        jump = -1
        if cfg.steps_per_trajectory > 1 and rng.random() < cfg.elevator_prob:
            jump = int(rng.integers(1, cfg.steps_per_trajectory))
            direction = 1 if floor == 0 else -1 if floor == cfg.floors - 1 else int(rng.choice([-1, 1]))
        chain: list[int] = []
        f = floor
        for s, (x, y) in enumerate(pts):
            if s == jump:
                f = floor + direction
                before = chain[-1]
                chains.append(chain)
                chain = []
                idx = record(x, y, f)
                elevation.append((before, idx))
                chain.append(idx)
                continue
            chain.append(record(x, y, f))
        chains.append(chain)

    # empty scans cannot be embedded; drop them and close the gap in their chain
    keep = [i for i, r in enumerate(rssi_maps) if r]
    if len(keep) != len(rssi_maps):
        remap = {old: new for new, old in enumerate(keep)}
        chains = [[remap[i] for i in c if i in remap] for c in chains]
        chains = [c for c in chains if c]
        elevation = [(remap[a], remap[b]) for a, b in elevation if a in remap and b in remap]
        rssi_maps = [rssi_maps[i] for i in keep]
        floors = [floors[i] for i in keep]
        coords = [coords[i] for i in keep]

    return assemble_dataset(
        rssi_maps,
        chains,
        [float(i) for i in range(len(rssi_maps))],
        elevation_pairs=elevation,
        ground_truth={i: floor_label(f) for i, f in enumerate(floors)},
        coordinates=dict(enumerate(coords)),
    )


# --------------------------------------------------------------------------- writers


def write_huawei_format(ds: RawDataset, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    fps = {str(fp.id): {ds.ap_names[ap]: v for ap, v in fp.rssi.items()} for fp in ds.fingerprints}
    (d / "fingerprints.json").write_text(json.dumps(fps, sort_keys=False), encoding="utf-8")
    with open(d / "steps.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id1", "id2"])
        for t in ds.trajectories:
            for a, b in zip(t.fingerprint_ids, t.fingerprint_ids[1:]):
                w.writerow([a, b])
    with open(d / "elevations.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id1", "id2"])
        w.writerows(ds.elevation_pairs)
    with open(d / "estimated_wifi_distances.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id1", "id2", "distance"])
        for r in ds.provided_distances or ():
            w.writerow([r.id_a, r.id_b, repr(float(r.meters))])
    if ds.ground_truth is not None:
        gt = {str(i): ds.ground_truth[i] for i in range(ds.n)}
        (d / "GT.json").write_text(json.dumps(gt), encoding="utf-8")


def write_uji_format(ds: RawDataset, path, seconds_between_scans: float = 10.0, gap: float = 3600.0) -> None:
    """Write a 529-column UJIIndoorLoc-style CSV.

    Each trajectory becomes its own USERID with scans ``seconds_between_scans``
    apart, so re-ingest with the default 600 s threshold reproduces the
    trajectories. Labels must look like ``F<floor>`` or ``B<b>-F<floor>``.
    AP columns beyond 520 cannot be represented.
    """
    if len(ds.ap_names) > UJI_NUM_WAPS:
        raise ConfigurationError(f"dataset has {len(ds.ap_names)} APs; UJI layout holds {UJI_NUM_WAPS}")
    if ds.ground_truth is None:
        raise ConfigurationError("UJI layout needs ground-truth floors")
    coords = ds.coordinates or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(UJI_COLUMNS)
        for t in ds.trajectories:
            for pos, i in enumerate(t.fingerprint_ids):
                fp = ds.fingerprints[i]
                waps = [UJI_MISSING] * UJI_NUM_WAPS
                for ap, v in fp.rssi.items():
                    waps[ap] = v
                building, floor = _split_label(ds.ground_truth[i])
                x, y = coords.get(i, (0.0, 0.0))
                ts = t.id * gap + pos * seconds_between_scans
                w.writerow(waps + [repr(x), repr(y), floor, building, 0, 0, t.id, 0, repr(float(ts))])


def _split_label(label: str) -> tuple[int, int]:
    parts = label.split("-")
    if len(parts) == 1 and label.startswith("F"):
        return 0, int(label[1:])
    if len(parts) == 2 and parts[0].startswith("B") and parts[1].startswith("F"):
        return int(parts[0][1:]), int(parts[1][1:])
    raise ConfigurationError(f"label {label!r} cannot be written as BUILDINGID/FLOOR")
