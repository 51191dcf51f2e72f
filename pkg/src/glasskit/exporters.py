"""CSV export of stored gaze data.

Output is deterministic: fixed headers, fixed decimal notation with six
fractional digits, '\\n' line endings, and a stable global ordering, so
re-exporting the same store is byte-identical.
"""

from __future__ import annotations

import csv
import os
from typing import List, Tuple

from .filters import IdtConfig, idt_fixations
from .gazedata import CHANNEL_GAZE2D, CHANNELS, GazeDataStore
from .livedata import (
    IMU_ACCELEROMETER,
    CustomApiEvent,
    EyeSample,
    GazePosition2D,
    GazePosition3D,
    ImuSample,
    LiveDataPacket,
    LoggedEvent,
)

RAW_HEADER = [
    "ts_us", "channel", "s",
    "gp_x", "gp_y",
    "gp3_x", "gp3_y", "gp3_z",
    "eye", "pc_x", "pc_y", "pc_z", "pd", "gd_x", "gd_y", "gd_z",
    "ac_x", "ac_y", "ac_z", "gy_x", "gy_y", "gy_z",
    "event_type", "event_tag",
]

FIXATION_HEADER = [
    "fixation_id", "onset_ts_us", "duration_ms",
    "centroid_x", "centroid_y", "n_samples",
]

_CHANNEL_ORDER = {name: i for i, name in enumerate(CHANNELS)}


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def _raw_row(channel: str, p: LiveDataPacket) -> List[str]:
    row = {"ts_us": str(p.ts), "channel": channel, "s": str(p.s)}
    if isinstance(p, GazePosition2D):
        row["gp_x"], row["gp_y"] = _fmt(p.gp[0]), _fmt(p.gp[1])
    elif isinstance(p, GazePosition3D):
        row["gp3_x"], row["gp3_y"], row["gp3_z"] = map(_fmt, p.gp3)
    elif isinstance(p, EyeSample):
        row["eye"] = p.eye
        row["pc_x"], row["pc_y"], row["pc_z"] = map(_fmt, p.pc)
        row["pd"] = _fmt(p.pd)
        row["gd_x"], row["gd_y"], row["gd_z"] = map(_fmt, p.gd)
    elif isinstance(p, ImuSample):
        keys = ("ac_x", "ac_y", "ac_z") if p.kind == IMU_ACCELEROMETER else ("gy_x", "gy_y", "gy_z")
        for key, v in zip(keys, p.v):
            row[key] = _fmt(v)
    elif isinstance(p, LoggedEvent):
        row["event_tag"] = p.tag
    elif isinstance(p, CustomApiEvent):
        row["event_type"] = p.type
        row["event_tag"] = p.tag
    # sync packets carry only ts/channel/s in this schema
    return [row.get(col, "") for col in RAW_HEADER]


def export_raw_csv(store: GazeDataStore, path: str | os.PathLike) -> int:
    """Write every accepted sample as one CSV row, globally ordered by
    timestamp (channel order breaks ties). Returns rows written."""
    entries: List[Tuple[int, int, LiveDataPacket, str]] = []
    for channel in CHANNELS:
        for p in store.channel(channel):
            entries.append((p.ts, _CHANNEL_ORDER[channel], p, channel))
    entries.sort(key=lambda e: (e[0], e[1]))

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RAW_HEADER)
        for ts, _, p, channel in entries:
            writer.writerow(_raw_row(channel, p))
    return len(entries)


def export_fixations_csv(
    store: GazeDataStore,
    cfg: IdtConfig,
    path: str | os.PathLike,
) -> int:
    """Run the I-DT filter over the store's gaze channel and write one
    row per fixation, ids 1-based in onset order. Returns rows written."""
    fixations = idt_fixations(store.channel(CHANNEL_GAZE2D), cfg)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIXATION_HEADER)
        for i, f in enumerate(fixations, start=1):
            writer.writerow(
                [
                    str(i),
                    str(f.onset_ts),
                    _fmt(f.duration_ms),
                    _fmt(f.centroid[0]),
                    _fmt(f.centroid[1]),
                    str(f.n_samples),
                ]
            )
    return len(fixations)
