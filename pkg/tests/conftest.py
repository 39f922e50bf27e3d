import csv
import json
from pathlib import Path

import numpy as np
import pytest

from floorsep import synth
from floorsep.ingest import UJI_COLUMNS, UJI_MISSING, UJI_NUM_WAPS


def uji_row(waps: dict, ts, user=1, phone=1, building=0, floor=0, lon=0.0, lat=0.0):
    """One UJIIndoorLoc row; ``waps`` maps 0-based WAP column to RSSI."""
    cells = [UJI_MISSING] * UJI_NUM_WAPS
    for j, v in waps.items():
        cells[j] = v
    return cells + [lon, lat, floor, building, 0, 0, user, phone, ts]


def write_uji(path: Path, rows, header=True) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(UJI_COLUMNS)
        w.writerows(rows)
    return path


def write_huawei(directory: Path, fingerprints: dict, steps=(), elevations=(), distances=(), gt=None) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "fingerprints.json").write_text(json.dumps(fingerprints), encoding="utf-8")
    for name, rows, head in [
        ("steps.csv", steps, ["id1", "id2"]),
        ("elevations.csv", elevations, ["id1", "id2"]),
        ("estimated_wifi_distances.csv", distances, ["id1", "id2", "distance"]),
    ]:
        with open(directory / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(head)
            w.writerows(rows)
    if gt is not None:
        (directory / "GT.json").write_text(json.dumps(gt), encoding="utf-8")
    return directory


@pytest.fixture(scope="session")
def small_building():
    """A 3-floor building small enough for fast end-to-end tests."""
    cfg = synth.SyntheticBuildingConfig(
        floors=3, floor_width=20.0, floor_depth=15.0, trajectories=9, steps_per_trajectory=12, seed=7
    )
    return synth.generate(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
