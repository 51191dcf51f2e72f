"""Timestamp-ordered, validity-filtered storage for live-data packets.

One writer (the streaming receiver) and any number of readers may use a
store concurrently; a single internal lock keeps snapshots and range
queries consistent.
"""

from __future__ import annotations

import bisect
import threading
from dataclasses import dataclass
from typing import Dict, List, Optional

from .config import DEFAULT_REORDER_WINDOW_US
from .errors import InvalidRange
from .livedata import (
    EYE_LEFT,
    CustomApiEvent,
    EyeSample,
    GazePosition2D,
    GazePosition3D,
    ImuSample,
    LiveDataPacket,
    LoggedEvent,
    SyncPacket,
)

CHANNEL_GAZE2D = "gaze2d"
CHANNEL_GAZE3D = "gaze3d"
CHANNEL_EYE_LEFT = "eye_left"
CHANNEL_EYE_RIGHT = "eye_right"
CHANNEL_IMU = "imu"
CHANNEL_EVENTS = "events"
CHANNEL_SYNC = "sync"

CHANNELS = (
    CHANNEL_GAZE2D,
    CHANNEL_GAZE3D,
    CHANNEL_EYE_LEFT,
    CHANNEL_EYE_RIGHT,
    CHANNEL_IMU,
    CHANNEL_EVENTS,
    CHANNEL_SYNC,
)

ACCEPTED = "accepted"
REJECTED_INVALID = "rejected_invalid"
REJECTED_EXPIRED = "rejected_expired"


def channel_of(p: LiveDataPacket) -> Optional[str]:
    """Store channel for a packet, or None for unknown packets."""
    if isinstance(p, GazePosition2D):
        return CHANNEL_GAZE2D
    if isinstance(p, GazePosition3D):
        return CHANNEL_GAZE3D
    if isinstance(p, EyeSample):
        return CHANNEL_EYE_LEFT if p.eye == EYE_LEFT else CHANNEL_EYE_RIGHT
    if isinstance(p, ImuSample):
        return CHANNEL_IMU
    if isinstance(p, (LoggedEvent, CustomApiEvent)):
        return CHANNEL_EVENTS
    if isinstance(p, SyncPacket):
        return CHANNEL_SYNC
    return None


@dataclass(frozen=True)
class GazeSnapshot:
    """Latest accepted sample per channel at snapshot time."""

    gaze2d: Optional[GazePosition2D] = None
    gaze3d: Optional[GazePosition3D] = None
    eye_left: Optional[EyeSample] = None
    eye_right: Optional[EyeSample] = None
    imu: Optional[ImuSample] = None
    events: Optional[LiveDataPacket] = None
    sync: Optional[SyncPacket] = None

    def as_dict(self) -> Dict[str, Optional[LiveDataPacket]]:
        return {name: getattr(self, name) for name in CHANNELS}


class GazeDataStore:
    """Keeps accepted samples per channel, ordered by timestamp.

    A packet is accepted iff its status flag is 0 and its timestamp is
    not older than the channel's high-water mark minus the reorder
    window. Later packets that duplicate an accepted (channel, ts) pair
    are rejected as expired, so the first arrival wins deterministically.
    """

    def __init__(self, reorder_window_us: int = DEFAULT_REORDER_WINDOW_US):
        self.reorder_window_us = reorder_window_us
        self._lock = threading.Lock()
        self._packets: Dict[str, List[LiveDataPacket]] = {c: [] for c in CHANNELS}
        self._ts: Dict[str, List[int]] = {c: [] for c in CHANNELS}
        self.counters = {ACCEPTED: 0, REJECTED_INVALID: 0, REJECTED_EXPIRED: 0}

    def ingest(self, p: LiveDataPacket) -> str:
        """Ingest one packet; returns the outcome counter name."""
        channel = channel_of(p)
        with self._lock:
            if channel is None or p.s != 0:
                outcome = REJECTED_INVALID
            else:
                ts_list = self._ts[channel]
                if ts_list and p.ts < ts_list[-1] - self.reorder_window_us:
                    outcome = REJECTED_EXPIRED
                else:
                    at = bisect.bisect_left(ts_list, p.ts)
                    if at < len(ts_list) and ts_list[at] == p.ts:
                        outcome = REJECTED_EXPIRED  # duplicate (channel, ts)
                    else:
                        ts_list.insert(at, p.ts)
                        self._packets[channel].insert(at, p)
                        outcome = ACCEPTED
            self.counters[outcome] += 1
            return outcome

    def snapshot(self) -> GazeSnapshot:
        """Latest accepted sample per channel; does not mutate the store."""
        with self._lock:
            latest = {
                channel: packets[-1] if packets else None
                for channel, packets in self._packets.items()
            }
        return GazeSnapshot(**latest)

    def range(self, channel: str, t0: int, t1: int) -> List[LiveDataPacket]:
        """All accepted samples of a channel with t0 <= ts <= t1, in order."""
        if t0 > t1:
            raise InvalidRange(f"t0 ({t0}) > t1 ({t1})")
        if channel not in self._packets:
            raise KeyError(f"unknown channel {channel!r}")
        with self._lock:
            ts_list = self._ts[channel]
            lo = bisect.bisect_left(ts_list, t0)
            hi = bisect.bisect_right(ts_list, t1)
            return self._packets[channel][lo:hi]

    def channel(self, channel: str) -> List[LiveDataPacket]:
        """Copy of a channel's accepted samples in timestamp order."""
        if channel not in self._packets:
            raise KeyError(f"unknown channel {channel!r}")
        with self._lock:
            return list(self._packets[channel])

    @property
    def accepted_count(self) -> int:
        with self._lock:
            return self.counters[ACCEPTED]

    def __len__(self) -> int:
        with self._lock:
            return sum(len(v) for v in self._packets.values())
