#!/usr/bin/env python3
"""Regenerate the bundled sample recording tree under data/.

The tree mirrors what the simulator writes to its SD root, with pinned
ids so documentation and tests can refer to a stable recording:

    data/projects/xejxnds/recordings/k3l4jms/segments/1/livedata.json.gz

With --write-golden the script also refreshes tests/golden/sample_tree.json,
computing the expected fixation count with the brute-force reference from
tests/oracles.py rather than the library filter.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from glasskit import (
    GazePosition2D,
    GazePosition3D,
    Scenario,
    ScenarioSegment,
    ScheduledEvent,
    SyncPacket,
    generate_scenario_packets,
)
from glasskit.simulator import DEVICE_WALL_EPOCH_US, write_recording_tree

PROJECT_ID = "xejxnds"
RECORDING_ID = "k3l4jms"
PARTICIPANT_ID = "pp00001"
SEED = 2024
CREATED = "2020-01-01T00:00:00+00:00"

SCENARIO = Scenario(
    sample_rate_hz=50,
    duration_ms=2500,
    segments=(
        ScenarioSegment(0, 800, (0.3, 0.3), 0.004, 0.95),
        ScenarioSegment(850, 1600, (0.7, 0.4), 0.004, 0.95),
        ScenarioSegment(1650, 2500, (0.45, 0.75), 0.004, 0.95),
    ),
    event_schedule=(
        ScheduledEvent(5, "logged", "recording_start"),
        ScheduledEvent(800, "custom", "block-2", type="condition"),
        ScheduledEvent(1650, "custom", "block-3", type="condition"),
        ScheduledEvent(2495, "logged", "recording_stop"),
    ),
)

SYNC_PERIOD_MS = 500
VIDEO_OFFSET_US = 250_000
GAZE3D_PERIOD_MS = 250


def build_packets():
    rng = np.random.default_rng(SEED)
    packets, _ = generate_scenario_packets(SCENARIO, rng)
    used = {p.ts for p in packets}

    def free(ts):
        while ts in used:
            ts += 1
        used.add(ts)
        return ts

    extras = []
    for ms in range(0, SCENARIO.duration_ms + 1, SYNC_PERIOD_MS):
        ts = free(ms * 1000 + 4)
        extras.append(SyncPacket(ts=ts, s=0, vts=ts + VIDEO_OFFSET_US))
    gaze_by_ts = {p.ts: p for p in packets if isinstance(p, GazePosition2D) and p.s == 0}
    for ms in range(0, SCENARIO.duration_ms, GAZE3D_PERIOD_MS):
        ts = free(ms * 1000 + 5)
        nearest = min(gaze_by_ts.values(), key=lambda p: abs(p.ts - ts))
        extras.append(
            GazePosition3D(
                ts=ts,
                s=0,
                gp3=(
                    round((nearest.gp[0] - 0.5) * 600.0, 6),
                    round((nearest.gp[1] - 0.5) * 400.0, 6),
                    850.0,
                ),
            )
        )
    return sorted(packets + extras, key=lambda p: p.ts)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default=REPO / "data", type=Path)
    parser.add_argument("--write-golden", action="store_true")
    args = parser.parse_args(argv)

    packets = build_packets()
    project = {"id": PROJECT_ID, "name": "sample-study", "created_utc": CREATED}
    participant = {
        "id": PARTICIPANT_ID,
        "name": "P01",
        "project_id": PROJECT_ID,
        "created_utc": CREATED,
    }
    recording = {
        "id": RECORDING_ID,
        "participant_id": PARTICIPANT_ID,
        "project_id": PROJECT_ID,
        "created_utc": CREATED,
    }
    paths = write_recording_tree(args.root, project, participant, recording, packets)
    for p in paths:
        print(p)

    if args.write_golden:
        from oracles import idt_reference

        valid = [p for p in packets if p.s == 0]
        gaze = [p for p in valid if isinstance(p, GazePosition2D)]
        windows = idt_reference(
            [p.ts for p in gaze],
            [p.gp[0] for p in gaze],
            [p.gp[1] for p in gaze],
            dispersion_threshold=5,
            duration_threshold_ms=100,
        )
        golden = {
            "project_id": PROJECT_ID,
            "recording_id": RECORDING_ID,
            "dispersion_threshold": 5,
            "duration_threshold_ms": 100,
            "raw_rows": len(valid),
            "fixation_rows": len(windows),
            "fixation_onsets_us": [int(gaze[i].ts) for i, _ in windows],
            "total_lines": len(packets),
        }
        golden_path = REPO / "tests" / "golden" / "sample_tree.json"
        golden_path.write_text(json.dumps(golden, indent=2) + "\n")
        print(golden_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
