"""Dataset ingest for the Huawei challenge layout and the UJIIndoorLoc CSV.

Both parsers produce a :class:`RawDataset` with dense fingerprint ids
``0..n-1``, AP identifiers interned to dense integers and fingerprints grouped
into trajectories.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError, IngestError, IntegrityError

UJI_NUM_WAPS = 520
UJI_NUM_COLUMNS = 529
UJI_MISSING = 100
UJI_COLUMNS = [f"WAP{i:03d}" for i in range(1, UJI_NUM_WAPS + 1)] + [
    "LONGITUDE",
    "LATITUDE",
    "FLOOR",
    "BUILDINGID",
    "SPACEID",
    "RELATIVEPOSITION",
    "USERID",
    "PHONEID",
    "TIMESTAMP",
]

HUAWEI_REQUIRED = ("fingerprints.json", "steps.csv", "elevations.csv", "estimated_wifi_distances.csv")


@dataclass(frozen=True)
class Fingerprint:
    id: int
    trajectory_id: int
    timestamp: float
    rssi: dict[int, int]


@dataclass(frozen=True)
class Trajectory:
    id: int
    fingerprint_ids: tuple[int, ...]


@dataclass(frozen=True)
class DistanceRecord:
    id_a: int
    id_b: int
    meters: float


@dataclass
class RawDataset:
    fingerprints: list[Fingerprint]
    trajectories: list[Trajectory]
    step_pairs: list[tuple[int, int]] = field(default_factory=list)
    elevation_pairs: list[tuple[int, int]] = field(default_factory=list)
    provided_distances: list[DistanceRecord] | None = None
    ground_truth: dict[int, str] | None = None
    coordinates: dict[int, tuple[float, float]] | None = None
    ap_names: list[str] = field(default_factory=list)
    source_ids: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.fingerprints)

    def validate(self) -> None:
        """Check the cross-reference invariants, raising IntegrityError."""
        n = self.n
        for i, fp in enumerate(self.fingerprints):
            if fp.id != i:
                raise IntegrityError("fingerprint ids are not dense", [i])
        bad = [
            (a, b)
            for a, b in list(self.step_pairs) + list(self.elevation_pairs)
            if not (0 <= a < n and 0 <= b < n)
        ]
        if bad:
            raise IntegrityError("pair references unknown fingerprint", bad)
        if self.provided_distances is not None:
            bad = [
                (r.id_a, r.id_b)
                for r in self.provided_distances
                if not (0 <= r.id_a < n and 0 <= r.id_b < n)
            ]
            if bad:
                raise IntegrityError("distance record references unknown fingerprint", bad)
        seen = [0] * n
        for t in self.trajectories:
            for i in t.fingerprint_ids:
                if not 0 <= i < n:
                    raise IntegrityError("trajectory references unknown fingerprint", [i])
                seen[i] += 1
                if self.fingerprints[i].trajectory_id != t.id:
                    raise IntegrityError("trajectory id mismatch", [i])
        wrong = [i for i, c in enumerate(seen) if c != 1]
        if wrong:
            raise IntegrityError("fingerprints not in exactly one trajectory", wrong)
        if self.ground_truth is not None:
            missing = [i for i in range(n) if i not in self.ground_truth]
            if missing:
                raise IntegrityError("ground truth does not cover fingerprints", missing)


def assemble_dataset(
    rssi_maps: list[dict],
    chains: list[list[int]],
    timestamps: list[float] | None = None,
    *,
    step_pairs=None,
    elevation_pairs=(),
    provided_distances=None,
    ground_truth=None,
    coordinates=None,
    source_ids=None,
) -> RawDataset:
    """Build a dataset from per-record RSSI maps and ordered trajectory chains.

    Records are renumbered so that ids follow chain order. Every index-valued
    argument (pairs, ground truth keys, coordinates keys) refers to the
    original record positions and is remapped accordingly.
    """
    order = [i for chain in chains for i in chain]
    if sorted(order) != list(range(len(rssi_maps))):
        raise IntegrityError("chains must cover every record exactly once")
    new_id = {old: new for new, old in enumerate(order)}

    ap_index: dict[str, int] = {}
    ap_names: list[str] = []

    def intern(ap) -> int:
        key = str(ap)
        if key not in ap_index:
            ap_index[key] = len(ap_names)
            ap_names.append(key)
        return ap_index[key]

    fingerprints: list[Fingerprint] = []
    trajectories: list[Trajectory] = []
    for tid, chain in enumerate(chains):
        ids = []
        for pos, old in enumerate(chain):
            ts = float(timestamps[old]) if timestamps is not None else float(pos)
            rssi = {intern(ap): int(v) for ap, v in sorted(rssi_maps[old].items(), key=lambda kv: str(kv[0]))}
            fingerprints.append(Fingerprint(len(fingerprints), tid, ts, rssi))
            ids.append(new_id[old])
        trajectories.append(Trajectory(tid, tuple(ids)))

    if step_pairs is None:
        steps = [
            (t.fingerprint_ids[k], t.fingerprint_ids[k + 1])
            for t in trajectories
            for k in range(len(t.fingerprint_ids) - 1)
        ]
    else:
        steps = [(new_id[a], new_id[b]) for a, b in step_pairs]
    ds = RawDataset(
        fingerprints=fingerprints,
        trajectories=trajectories,
        step_pairs=steps,
        elevation_pairs=[(new_id[a], new_id[b]) for a, b in elevation_pairs],
        provided_distances=None
        if provided_distances is None
        else [DistanceRecord(new_id[r.id_a], new_id[r.id_b], r.meters) for r in provided_distances],
        ground_truth=None if ground_truth is None else {new_id[k]: str(v) for k, v in ground_truth.items()},
        coordinates=None
        if coordinates is None
        else {new_id[k]: (float(x), float(y)) for k, (x, y) in coordinates.items()},
        ap_names=ap_names,
        source_ids=[str(source_ids[old]) if source_ids is not None else str(old) for old in order],
    )
    ds.validate()
    return ds


# --------------------------------------------------------------------------- Huawei


def _read_text(path: Path) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def _load_fingerprints_json(path: Path) -> dict[str, dict]:
    text = _read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = None
    records: dict[str, dict] = {}
    if isinstance(data, dict):
        for key, value in data.items():
            records[str(key)] = _rssi_payload(value, key)
        return records
    if isinstance(data, list):
        for pos, value in enumerate(data):
            if isinstance(value, dict) and "id" in value:
                records[str(value["id"])] = _rssi_payload(value, pos)
            else:
                records[str(pos)] = _rssi_payload(value, pos)
        return records
    # JSON lines, one record per line
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path.name}: line {lineno} is not valid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise FormatError(f"{path.name}: line {lineno} is not a JSON object")
        if "id" in obj:
            records[str(obj["id"])] = _rssi_payload(obj, lineno)
        else:
            for key, value in obj.items():
                records[str(key)] = _rssi_payload(value, key)
    return records


def _rssi_payload(value, where) -> dict:
    if isinstance(value, dict):
        for key in ("rssi", "wifi", "aps"):
            if key in value and isinstance(value[key], dict):
                return value[key]
        value = {k: v for k, v in value.items() if k != "id"}
        try:
            return {str(k): int(round(float(v))) for k, v in value.items()}
        except (TypeError, ValueError):
            raise FormatError(f"fingerprint {where}: RSSI values must be numeric") from None
    raise FormatError(f"fingerprint {where}: expected an object mapping AP id to RSSI")


def _read_rows(path: Path, ncols: int) -> list[tuple[int, list[str]]]:
    """Rows of a small CSV; a non-numeric first row is treated as a header."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [c.strip() for c in row]
            if not row or all(c == "" for c in row):
                continue
            if len(row) < ncols:
                raise FormatError(f"{path.name}: row {lineno} has {len(row)} columns, expected {ncols}")
            if lineno == 1 and not _is_number(row[ncols - 1]):
                continue
            rows.append((lineno, row[:ncols]))
    return rows


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _sort_ids(ids):
    if all(_is_int(s) for s in ids):
        return sorted(ids, key=int)
    return sorted(ids)


def _is_int(s: str) -> bool:
    try:
        int(s)
    except ValueError:
        return False
    return True


def _norm_id(s: str) -> str:
    # "7.0" and "7" name the same fingerprint
    if _is_int(s):
        return str(int(s))
    if _is_number(s) and float(s).is_integer():
        return str(int(float(s)))
    return s


def _load_ground_truth(path: Path) -> dict[str, str]:
    data = json.loads(_read_text(path))
    if not isinstance(data, dict):
        raise FormatError(f"{path.name}: expected a JSON object")
    gt: dict[str, str] = {}
    if data and all(isinstance(v, list) for v in data.values()):
        for label, ids in data.items():
            for i in ids:
                gt[_norm_id(str(i))] = str(label)
    else:
        for key, label in data.items():
            gt[_norm_id(str(key))] = str(label)
    return gt


def _chains_from_steps(n: int, steps: list[tuple[int, int]]) -> list[list[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for a, b in steps:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    branches = [i for i in range(n) if len(adj[i]) > 2]
    if branches:
        raise IntegrityError("step edges branch (node with more than two step neighbours)", branches)
    seen = [False] * n
    chains = []
    for start in range(n):
        if seen[start] or len(adj[start]) == 2:
            continue
        chain = [start]
        seen[start] = True
        prev, cur = -1, start
        while True:
            nxt = [x for x in adj[cur] if x != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            seen[cur] = True
            chain.append(cur)
        chains.append(chain)
    cyclic = [i for i in range(n) if not seen[i]]
    if cyclic:
        raise IntegrityError("step edges form a cycle", cyclic)
    chains.sort(key=lambda c: min(c))
    return chains


def parse_huawei(directory) -> RawDataset:
    """Parse a Huawei challenge directory.

    Trajectories are the connected chains of the step edges; fingerprints
    without step edges become single-node trajectories. Timestamps are the
    positions along each chain since the layout carries no clock.
    """
    d = Path(directory)
    for name in HUAWEI_REQUIRED:
        if not (d / name).is_file():
            raise IngestError(f"missing mandatory file: {name}")

    records = _load_fingerprints_json(d / "fingerprints.json")
    source_ids = _sort_ids([_norm_id(k) for k in records])
    raw = {_norm_id(k): v for k, v in records.items()}
    index = {sid: i for i, sid in enumerate(source_ids)}
    n = len(source_ids)

    def resolve(fname, rows, ncols):
        out, bad = [], []
        for lineno, row in rows:
            ids = [index.get(_norm_id(c)) for c in row[:2]]
            if None in ids:
                bad.append(f"{fname}:{lineno}")
                continue
            out.append((ids[0], ids[1], row[2] if ncols == 3 else None))
        if bad:
            raise IntegrityError(f"{fname} references unknown fingerprint ids", bad)
        return out

    steps = [(a, b) for a, b, _ in resolve("steps.csv", _read_rows(d / "steps.csv", 2), 2)]
    elevations = [(a, b) for a, b, _ in resolve("elevations.csv", _read_rows(d / "elevations.csv", 2), 2)]
    dist_rows = _read_rows(d / "estimated_wifi_distances.csv", 3)
    distances = []
    for a, b, m in resolve("estimated_wifi_distances.csv", dist_rows, 3):
        try:
            distances.append(DistanceRecord(a, b, float(m)))
        except ValueError:
            raise FormatError(f"estimated_wifi_distances.csv: bad distance value {m!r}") from None

    ground_truth = None
    if (d / "GT.json").is_file():
        gt = _load_ground_truth(d / "GT.json")
        missing = [sid for sid in source_ids if sid not in gt]
        if missing:
            raise IntegrityError("GT.json does not cover fingerprints", missing)
        ground_truth = {index[sid]: gt[sid] for sid in source_ids}

    chains = _chains_from_steps(n, steps)
    return assemble_dataset(
        [raw[sid] for sid in source_ids],
        chains,
        step_pairs=steps,
        elevation_pairs=elevations,
        provided_distances=distances,
        ground_truth=ground_truth,
        source_ids=source_ids,
    )


# --------------------------------------------------------------------------- UJI


def uji_label(building, floor) -> str:
    return f"B{int(building)}-F{int(floor)}"


def parse_uji(path, delta_t: float = 600.0) -> RawDataset:
    """Parse a UJIIndoorLoc CSV and segment it into trajectories.

    Rows are grouped by (USERID, PHONEID) and ordered by timestamp (file
    order breaks ties). A trajectory ends when the gap to the next row
    exceeds ``delta_t`` seconds or the building/floor changes. RSSI value 100
    means "not detected" and is dropped; rows left with no AP are discarded.
    """
    path = Path(path)
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != UJI_NUM_COLUMNS:
                raise FormatError(
                    f"{path.name}: row {lineno} has {len(row)} columns, expected {UJI_NUM_COLUMNS}"
                )
            if lineno == 1 and row[0].strip().upper().startswith("WAP"):
                continue
            try:
                waps = [int(float(c)) for c in row[:UJI_NUM_WAPS]]
                lon, lat = float(row[520]), float(row[521])
                floor, building = int(float(row[522])), int(float(row[523]))
                user, phone = int(float(row[526])), int(float(row[527]))
                ts = float(row[528])
            except ValueError as exc:
                raise FormatError(f"{path.name}: malformed row {lineno}: {exc}") from None
            rssi = {f"WAP{j + 1:03d}": v for j, v in enumerate(waps) if v != UJI_MISSING}
            if not rssi:
                continue
            rows.append((user, phone, ts, building, floor, lon, lat, rssi))

    groups: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i, r in enumerate(rows):
        groups[(r[0], r[1])].append(i)
    chains: list[list[int]] = []
    for key in sorted(groups):
        members = sorted(groups[key], key=lambda i: rows[i][2])
        chain = [members[0]]
        for prev, cur in zip(members, members[1:]):
            gap = rows[cur][2] - rows[prev][2]
            moved = rows[cur][3:5] != rows[prev][3:5]
            if gap > delta_t or moved:
                chains.append(chain)
                chain = []
            chain.append(cur)
        chains.append(chain)

    return assemble_dataset(
        [r[7] for r in rows],
        chains,
        [r[2] for r in rows],
        ground_truth={i: uji_label(r[3], r[4]) for i, r in enumerate(rows)},
        coordinates={i: (r[5], r[6]) for i, r in enumerate(rows)},
    )


# --------------------------------------------------------------------------- summary


@dataclass(frozen=True)
class DatasetSummary:
    fingerprints: int
    trajectories: int
    aps: int
    labels: int
    step_edges: int
    elevation_edges: int
    distance_records: int


def dataset_summary(ds: RawDataset | None) -> DatasetSummary:
    if ds is None:
        return DatasetSummary(0, 0, 0, 0, 0, 0, 0)
    aps = set()
    for fp in ds.fingerprints:
        aps.update(fp.rssi)
    return DatasetSummary(
        fingerprints=len(ds.fingerprints),
        trajectories=len(ds.trajectories),
        aps=len(aps),
        labels=len(set(ds.ground_truth.values())) if ds.ground_truth else 0,
        step_edges=len(ds.step_pairs),
        elevation_edges=len(ds.elevation_pairs),
        distance_records=len(ds.provided_distances or ()),
    )


def empty_dataset() -> RawDataset:
    return RawDataset(fingerprints=[], trajectories=[])


def load_dataset(kind: str, path) -> RawDataset:
    if kind == "huawei":
        return parse_huawei(path)
    if kind == "uji":
        return parse_uji(path)
    raise IngestError(f"unknown dataset kind {kind!r}")


__all__ = [
    "DatasetSummary",
    "DistanceRecord",
    "Fingerprint",
    "RawDataset",
    "Trajectory",
    "assemble_dataset",
    "dataset_summary",
    "parse_huawei",
    "parse_uji",
    "uji_label",
]

