"""Protocol-faithful device simulator.

Mimics the recording unit end to end: answers UDP discovery, serves the
JSON session API over HTTP, streams scripted gaze data as UDP datagrams
gated by client keep-alives, and writes finished recordings to an
SD-card-layout directory tree.

Determinism contract: given a seed, a scenario, and a request sequence,
the simulator produces identical packet bytes and an identical SD tree.
Sample timestamps come from a logical microsecond clock (advanced by
scenario playback and event receipts), never from the wall clock; the
wall clock only paces real-time emission and expires keep-alives.
"""

from __future__ import annotations

import json
import logging
import socket
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import (
    DEFAULT_VIDEO_PORT,
    KEEPALIVE_CUTOFF_S,
)
from .errors import (
    ApiError,
    NotCalibrated,
    NotFound,
    PortInUse,
    ScenarioInvalid,
    SimulatorStateError,
    UnknownParentId,
)
from .livedata import (
    IMU_ACCELEROMETER,
    IMU_GYROSCOPE,
    CustomApiEvent,
    EyeSample,
    GazePosition2D,
    ImuSample,
    LiveDataPacket,
    LoggedEvent,
    serialize_packet,
    write_livedata_file,
)

logger = logging.getLogger(__name__)

OUTCOME_SUCCESS = "success"
OUTCOME_FAIL = "fail"
OUTCOME_NEVER = "never"

EVENT_LOGGED = "logged"
EVENT_CUSTOM = "custom"

_ID_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"

# Logical device epoch for created_utc / event wall timestamps
# (2020-01-01T00:00:00Z); fixed so metadata bytes are reproducible.
DEVICE_WALL_EPOCH_US = 1_577_836_800_000_000


# ---------------------------------------------------------------------------
# Scenarios


@dataclass(frozen=True)
class ScenarioSegment:
    """One dwell interval: gaze hovers around ``target`` with Gaussian
    noise; a (1 - validity_rate) fraction of its samples is flagged
    invalid."""

    start_ms: int
    end_ms: int
    target: Tuple[float, float]
    noise_std: float = 0.0
    validity_rate: float = 1.0


@dataclass(frozen=True)
class ScheduledEvent:
    at_ms: int
    kind: str  # EVENT_LOGGED or EVENT_CUSTOM
    tag: str
    type: Optional[str] = None
    payload: Optional[str] = None


@dataclass(frozen=True)
class Scenario:
    """Scripted synthetic gaze timeline driving the stream generator."""

    sample_rate_hz: int
    duration_ms: int
    segments: Tuple[ScenarioSegment, ...]
    event_schedule: Tuple[ScheduledEvent, ...] = ()

    def validate(self) -> None:
        if self.sample_rate_hz not in (50, 100):
            raise ScenarioInvalid("sample_rate_hz must be 50 or 100")
        if self.duration_ms <= 0:
            raise ScenarioInvalid("duration_ms must be positive")
        prev_end = 0
        for seg in self.segments:
            if not (0 <= seg.start_ms < seg.end_ms <= self.duration_ms):
                raise ScenarioInvalid(f"segment [{seg.start_ms},{seg.end_ms}) outside scenario")
            if seg.start_ms < prev_end:
                raise ScenarioInvalid("segments overlap")
            if not (0.0 <= seg.validity_rate <= 1.0):
                raise ScenarioInvalid("validity_rate must be within [0,1]")
            if seg.noise_std < 0:
                raise ScenarioInvalid("noise_std must be non-negative")
            prev_end = seg.end_ms
        for ev in self.event_schedule:
            if not (0 <= ev.at_ms <= self.duration_ms):
                raise ScenarioInvalid("event outside scenario duration")
            if ev.kind not in (EVENT_LOGGED, EVENT_CUSTOM):
                raise ScenarioInvalid(f"unknown event kind {ev.kind!r}")
            if not ev.tag:
                raise ScenarioInvalid("event tag must be non-empty")
            if ev.kind == EVENT_CUSTOM and not ev.type:
                raise ScenarioInvalid("custom events need a type")

    def to_dict(self) -> dict:
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "duration_ms": self.duration_ms,
            "segments": [
                {
                    "start_ms": s.start_ms,
                    "end_ms": s.end_ms,
                    "target": list(s.target),
                    "noise_std": s.noise_std,
                    "validity_rate": s.validity_rate,
                }
                for s in self.segments
            ],
            "event_schedule": [
                {
                    "at_ms": e.at_ms,
                    "kind": e.kind,
                    "tag": e.tag,
                    "type": e.type,
                    "payload": e.payload,
                }
                for e in self.event_schedule
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Scenario":
        try:
            scenario = cls(
                sample_rate_hz=int(raw["sample_rate_hz"]),
                duration_ms=int(raw["duration_ms"]),
                segments=tuple(
                    ScenarioSegment(
                        start_ms=int(s["start_ms"]),
                        end_ms=int(s["end_ms"]),
                        target=(float(s["target"][0]), float(s["target"][1])),
                        noise_std=float(s.get("noise_std", 0.0)),
                        validity_rate=float(s.get("validity_rate", 1.0)),
                    )
                    for s in raw["segments"]
                ),
                event_schedule=tuple(
                    ScheduledEvent(
                        at_ms=int(e["at_ms"]),
                        kind=e["kind"],
                        tag=e["tag"],
                        type=e.get("type"),
                        payload=e.get("payload"),
                    )
                    for e in raw.get("event_schedule", ())
                ),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ScenarioInvalid(f"bad scenario document: {exc}") from exc
        scenario.validate()
        return scenario

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def generate_scenario_packets(
    scenario: Scenario,
    rng: np.random.Generator,
    clock_base_us: int = 0,
    gidx_base: int = 0,
    wall_epoch_us: int = DEVICE_WALL_EPOCH_US,
) -> Tuple[List[LiveDataPacket], int]:
    """Expand a scenario into its packet timeline.

    Each sample tick produces a gaze packet plus left/right eye samples
    and an inertial sample at +1..+3 us offsets; scheduled events are
    assigned the first free microsecond at their offset. Returns the
    packets sorted by timestamp and the number of gaze ticks generated.
    The invalid-sample mask is drawn without replacement, so a segment
    with n ticks gets exactly round((1 - validity_rate) * n) invalid
    gaze packets.
    """
    scenario.validate()
    period_us = 1_000_000 // scenario.sample_rate_hz
    packets: List[LiveDataPacket] = []
    used_ts = set()
    gidx = gidx_base

    for seg in scenario.segments:
        n = (seg.end_ms - seg.start_ms) * scenario.sample_rate_hz // 1000
        if n <= 0:
            continue
        noise = (
            rng.normal(0.0, seg.noise_std, size=(n, 2))
            if seg.noise_std > 0
            else np.zeros((n, 2))
        )
        n_invalid = int(round((1.0 - seg.validity_rate) * n))
        invalid = set(int(i) for i in rng.choice(n, size=n_invalid, replace=False))
        pc_noise = rng.normal(0.0, 0.1, size=(n, 2, 3))
        pd_noise = rng.normal(0.0, 0.05, size=(n, 2))
        imu_noise = rng.normal(0.0, 1.0, size=(n, 3))

        for k in range(n):
            t = clock_base_us + seg.start_ms * 1000 + k * period_us
            gx = float(seg.target[0] + noise[k, 0])
            gy = float(seg.target[1] + noise[k, 1])
            if k in invalid:
                packets.append(GazePosition2D(ts=t, s=1, gidx=gidx, gp=None))
            else:
                packets.append(GazePosition2D(ts=t, s=0, gidx=gidx, gp=(gx, gy)))
            # gaze direction from an eye toward the scene point, unit length
            direction = np.array([gx - 0.5, gy - 0.5, 1.0])
            direction /= np.linalg.norm(direction)
            gd = tuple(float(c) for c in direction)
            for side, (name, base_x) in enumerate((("left", -31.0), ("right", 31.0))):
                pc = (
                    float(base_x + pc_noise[k, side, 0]),
                    float(2.5 + pc_noise[k, side, 1]),
                    float(-28.0 + pc_noise[k, side, 2]),
                )
                pd = max(1.0, float(3.5 + pd_noise[k, side]))
                packets.append(
                    EyeSample(ts=t + 1 + side, s=0, eye=name, pc=pc, pd=pd, gd=gd)
                )
            if gidx % 2 == 0:
                v = tuple(float(c) for c in (0.05 * imu_noise[k] + [0.0, 0.0, -9.81]))
                packets.append(ImuSample(ts=t + 3, s=0, kind=IMU_ACCELEROMETER, v=v))
            else:
                v = tuple(float(c) for c in 0.5 * imu_noise[k])
                packets.append(ImuSample(ts=t + 3, s=0, kind=IMU_GYROSCOPE, v=v))
            used_ts.update((t, t + 1, t + 2, t + 3))
            gidx += 1

    for ev in sorted(scenario.event_schedule, key=lambda e: e.at_ms):
        t = clock_base_us + ev.at_ms * 1000
        while t in used_ts:
            t += 1
        used_ts.add(t)
        if ev.kind == EVENT_LOGGED:
            packets.append(LoggedEvent(ts=t, s=0, tag=ev.tag, payload=ev.payload))
        else:
            packets.append(
                CustomApiEvent(ts=t, s=0, ets=wall_epoch_us + t, type=ev.type, tag=ev.tag)
            )

    packets.sort(key=lambda p: p.ts)
    return packets, gidx - gidx_base


# ---------------------------------------------------------------------------
# Engine (catalog, state machines, emission)


@dataclass
class SimulatorConfig:
    sd_root: Path
    host: str = "127.0.0.1"
    api_port: int = 0  # 0 binds an ephemeral port
    stream_port: int = 0
    discovery_port: int = 0
    video_port: int = DEFAULT_VIDEO_PORT
    seed: int = 0
    calibration_outcome: str = OUTCOME_SUCCESS
    calibration_delay_s: float = 0.2
    device_id: Optional[str] = None
    wall_epoch_us: int = DEVICE_WALL_EPOCH_US
    auto_scenario: Optional[Scenario] = None


class DeviceEngine:
    """Catalog state machines, logical clock, and packet emission.

    All public methods are safe to call from any thread; the HTTP layer
    and in-process callers go through the same lock-serialized paths.
    """

    def __init__(self, config: SimulatorConfig):
        self.config = config
        self.device_id = config.device_id or f"simglasses-{config.seed:04d}"
        self._rng = np.random.default_rng(config.seed)
        self._lock = threading.RLock()
        self.clock_us = 0
        self._gidx = 0
        self.projects: Dict[str, dict] = {}
        self.participants: Dict[str, dict] = {}
        self.calibrations: Dict[str, dict] = {}
        self.recordings: Dict[str, dict] = {}
        self.active_recording_id: Optional[str] = None
        self.clients: Dict[tuple, float] = {}
        self.emission_log: List[LiveDataPacket] = []
        self.datagram_sender = None  # wired to the stream socket by the simulator

    # -- identifiers and clock ------------------------------------------------

    def _new_id(self) -> str:
        while True:
            chars = self._rng.integers(0, len(_ID_ALPHABET), size=7)
            new = "".join(_ID_ALPHABET[c] for c in chars)
            if not (
                new in self.projects
                or new in self.participants
                or new in self.calibrations
                or new in self.recordings
            ):
                return new

    def _now_utc(self) -> str:
        wall_us = self.config.wall_epoch_us + self.clock_us
        return datetime.fromtimestamp(wall_us / 1e6, tz=timezone.utc).isoformat()

    # -- catalog --------------------------------------------------------------

    def create_project(self, name: str) -> dict:
        with self._lock:
            record = {"id": self._new_id(), "name": name, "created_utc": self._now_utc()}
            self.projects[record["id"]] = record
            return dict(record)

    def create_participant(self, project_id: str, name: str) -> dict:
        with self._lock:
            if project_id not in self.projects:
                raise UnknownParentId(404, {"error": "unknown_parent"})
            record = {
                "id": self._new_id(),
                "name": name,
                "project_id": project_id,
                "created_utc": self._now_utc(),
            }
            self.participants[record["id"]] = record
            return dict(record)

    def create_calibration(self, project_id: str, participant_id: str) -> dict:
        with self._lock:
            if project_id not in self.projects or participant_id not in self.participants:
                raise UnknownParentId(404, {"error": "unknown_parent"})
            record = {
                "id": self._new_id(),
                "project_id": project_id,
                "participant_id": participant_id,
                "state": "created",
                "started_mono": None,
            }
            self.calibrations[record["id"]] = record
            return {"id": record["id"], "state": record["state"]}

    def start_calibration(self, calibration_id: str) -> None:
        with self._lock:
            cal = self.calibrations.get(calibration_id)
            if cal is None:
                raise NotFound(f"calibration {calibration_id}")
            cal["state"] = "calibrating"
            cal["started_mono"] = time.monotonic()

    def calibration_status(self, calibration_id: str) -> str:
        with self._lock:
            cal = self.calibrations.get(calibration_id)
            if cal is None:
                raise NotFound(f"calibration {calibration_id}")
            if cal["state"] == "calibrating" and self.config.calibration_outcome != OUTCOME_NEVER:
                if time.monotonic() - cal["started_mono"] >= self.config.calibration_delay_s:
                    cal["state"] = (
                        "calibrated"
                        if self.config.calibration_outcome == OUTCOME_SUCCESS
                        else "failed"
                    )
            return cal["state"]

    def create_recording(self, participant_id: str) -> dict:
        with self._lock:
            if participant_id not in self.participants:
                raise UnknownParentId(404, {"error": "unknown_parent"})
            participant = self.participants[participant_id]
            record = {
                "id": self._new_id(),
                "participant_id": participant_id,
                "project_id": participant["project_id"],
                "created_utc": self._now_utc(),
                "state": "created",
                "captured": [],
            }
            self.recordings[record["id"]] = record
            return {k: record[k] for k in ("id", "participant_id", "project_id", "created_utc")}

    def start_recording(self, recording_id: str) -> None:
        with self._lock:
            rec = self.recordings.get(recording_id)
            if rec is None:
                raise NotFound(f"recording {recording_id}")
            calibrated = any(
                cal["participant_id"] == rec["participant_id"]
                and self.calibration_status(cal["id"]) == "calibrated"
                for cal in list(self.calibrations.values())
            )
            if not calibrated:
                raise NotCalibrated(409, {"error": "not_calibrated"})
            if rec["state"] != "created":
                raise ApiError(409, {"error": "conflict"}, "conflict")
            if self.active_recording_id is not None:
                raise ApiError(409, {"error": "recording_active"}, "recording_active")
            rec["state"] = "recording"
            self.active_recording_id = recording_id

    def stop_recording(self, recording_id: str) -> List[Path]:
        with self._lock:
            rec = self.recordings.get(recording_id)
            if rec is None:
                raise NotFound(f"recording {recording_id}")
            if rec["state"] != "recording":
                raise ApiError(409, {"error": "not_recording"}, "not_recording")
            rec["state"] = "stopped"
            self.active_recording_id = None
        return self.finalize_recording(recording_id)

    # -- SD card --------------------------------------------------------------

    def recording_dir(self, recording_id: str) -> Path:
        rec = self.recordings[recording_id]
        return (
            Path(self.config.sd_root)
            / "projects"
            / rec["project_id"]
            / "recordings"
            / recording_id
        )

    def finalize_recording(self, recording_id: str) -> List[Path]:
        """Write the recording's SD tree; idempotent once stopped."""
        with self._lock:
            rec = self.recordings.get(recording_id)
            if rec is None:
                raise NotFound(f"recording {recording_id}")
            if rec["state"] != "stopped":
                raise SimulatorStateError(
                    f"recording {recording_id} is {rec['state']}, not stopped"
                )
            project = self.projects[rec["project_id"]]
            participant = self.participants[rec["participant_id"]]
            packets = list(rec["captured"])
        return write_recording_tree(
            self.config.sd_root, project, participant, rec, packets
        )

    # -- listings ---------------------------------------------------------

    def list_projects(self) -> List[dict]:
        with self._lock:
            return [
                {**p, "path": str(Path(self.config.sd_root) / "projects" / p["id"])}
                for p in self.projects.values()
            ]

    def list_recordings(self, project_id: str) -> List[dict]:
        with self._lock:
            if project_id not in self.projects:
                raise NotFound(f"project {project_id}")
            return [
                {
                    "id": rec["id"],
                    "participant_id": rec["participant_id"],
                    "project_id": rec["project_id"],
                    "created_utc": rec["created_utc"],
                    "state": rec["state"],
                    "path": str(self.recording_dir(rec["id"])),
                }
                for rec in self.recordings.values()
                if rec["project_id"] == project_id
            ]

    def list_segments(self, recording_id: str) -> List[dict]:
        with self._lock:
            if recording_id not in self.recordings:
                raise NotFound(f"recording {recording_id}")
            seg_dir = self.recording_dir(recording_id) / "segments" / "1"
            return [
                {
                    "id": "1",
                    "path": str(seg_dir),
                    "livedata": str(seg_dir / "livedata.json.gz"),
                }
            ]

    # -- events and emission ----------------------------------------------

    def submit_event(
        self,
        kind: str,
        tag: str,
        type: Optional[str] = None,
        payload: Optional[str] = None,
    ) -> int:
        if kind not in (EVENT_LOGGED, EVENT_CUSTOM) or not tag:
            raise ApiError(400, {"error": "bad_request"}, "bad_request")
        if kind == EVENT_CUSTOM and not type:
            raise ApiError(400, {"error": "bad_request"}, "bad_request")
        with self._lock:
            ts = self.clock_us
            self.clock_us = ts + 1
            if kind == EVENT_LOGGED:
                packet: LiveDataPacket = LoggedEvent(ts=ts, s=0, tag=tag, payload=payload)
            else:
                packet = CustomApiEvent(
                    ts=ts, s=0, ets=self.config.wall_epoch_us + ts, type=type, tag=tag
                )
            self._emit(packet)
            return ts

    def register_keepalive(self, addr: tuple) -> None:
        with self._lock:
            self.clients[addr] = time.monotonic()

    def live_clients(self) -> List[tuple]:
        """Clients whose last keep-alive is fresher than the cutoff."""
        now = time.monotonic()
        with self._lock:
            stale = [a for a, t in self.clients.items() if now - t > KEEPALIVE_CUTOFF_S]
            for a in stale:
                del self.clients[a]
            return list(self.clients)

    def _emit(self, packet: LiveDataPacket) -> None:
        """Log a packet, capture it into the active recording, and fan it
        out to live streaming clients. Callers hold the lock."""
        self.emission_log.append(packet)
        if packet.ts >= self.clock_us:
            self.clock_us = packet.ts + 1
        if self.active_recording_id is not None:
            self.recordings[self.active_recording_id]["captured"].append(packet)
        if self.datagram_sender is not None:
            data = serialize_packet(packet).encode("utf-8")
            for addr in self.live_clients():
                try:
                    self.datagram_sender(data, addr)
                except OSError:
                    pass

    def emit_packet(self, packet: LiveDataPacket) -> None:
        with self._lock:
            self._emit(packet)

    def recording_log(self, recording_id: str) -> List[LiveDataPacket]:
        """Generation-time capture log of a recording (independent of the
        files written at finalize)."""
        with self._lock:
            if recording_id not in self.recordings:
                raise NotFound(f"recording {recording_id}")
            return list(self.recordings[recording_id]["captured"])

    def status(self) -> dict:
        with self._lock:
            return {
                "id": self.device_id,
                "recording": self.active_recording_id is not None,
                "clock_us": self.clock_us,
            }


def write_recording_tree(
    sd_root,
    project: dict,
    participant: dict,
    recording: dict,
    packets: List[LiveDataPacket],
) -> List[Path]:
    """Write one recording's directory tree under the SD root.

    Layout: projects/<project>/recordings/<recording>/segments/1/ with
    livedata.json.gz plus project/participant/recording metadata files.
    Bytes are deterministic for identical inputs.
    """
    project_dir = Path(sd_root) / "projects" / project["id"]
    rec_dir = project_dir / "recordings" / recording["id"]
    seg_dir = rec_dir / "segments" / "1"
    seg_dir.mkdir(parents=True, exist_ok=True)

    def dump(path: Path, obj: dict) -> Path:
        path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        return path

    paths = [
        dump(
            project_dir / "project.json",
            {k: project[k] for k in ("id", "name", "created_utc")},
        ),
        dump(
            rec_dir / "participant.json",
            {k: participant[k] for k in ("id", "name", "project_id", "created_utc")},
        ),
        dump(
            rec_dir / "recording.json",
            {
                "id": recording["id"],
                "participant_id": recording["participant_id"],
                "project_id": recording["project_id"],
                "created_utc": recording["created_utc"],
                "segments": ["1"],
            },
        ),
    ]
    livedata = seg_dir / "livedata.json.gz"
    write_livedata_file(livedata, packets)
    paths.append(livedata)
    return paths


# ---------------------------------------------------------------------------
# Network front ends


class _ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # keep test output clean
        logger.debug("api: " + fmt, *args)

    def _send(self, status: int, obj) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        obj = json.loads(raw.decode("utf-8"))
        if not isinstance(obj, dict):
            raise ValueError("body must be a JSON object")
        return obj

    def _dispatch(self, method: str) -> None:
        engine: DeviceEngine = self.server.engine  # type: ignore[attr-defined]
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        try:
            body = self._body() if method == "POST" else {}
            result = self._route(engine, method, parts, body)
        except (json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
            self._send(400, {"error": "bad_request", "detail": str(exc)})
        except NotFound as exc:
            self._send(404, {"error": "not_found", "detail": str(exc)})
        except SimulatorStateError as exc:
            self._send(409, {"error": "conflict", "detail": str(exc)})
        except ApiError as exc:
            payload = exc.body if isinstance(exc.body, dict) else {"error": exc.code}
            self._send(exc.status, payload)
        else:
            self._send(200, result)

    def _route(self, engine: DeviceEngine, method: str, parts: List[str], body: dict):
        if parts[:1] != ["api"]:
            raise NotFound(self.path)
        tail = parts[1:]
        if method == "GET":
            if tail == ["system", "status"]:
                return engine.status()
            if tail == ["projects"]:
                return engine.list_projects()
            if len(tail) == 3 and tail[0] == "projects" and tail[2] == "recordings":
                return engine.list_recordings(tail[1])
            if len(tail) == 2 and tail[0] == "calibrations":
                return {"id": tail[1], "state": engine.calibration_status(tail[1])}
            if len(tail) == 3 and tail[0] == "recordings" and tail[2] == "segments":
                return engine.list_segments(tail[1])
        elif method == "POST":
            if tail == ["projects"]:
                return engine.create_project(str(body["name"]))
            if tail == ["participants"]:
                return engine.create_participant(str(body["project_id"]), str(body["name"]))
            if tail == ["calibrations"]:
                return engine.create_calibration(
                    str(body["project_id"]), str(body["participant_id"])
                )
            if len(tail) == 3 and tail[0] == "calibrations" and tail[2] == "start":
                engine.start_calibration(tail[1])
                return {}
            if tail == ["recordings"]:
                return engine.create_recording(str(body["participant_id"]))
            if len(tail) == 3 and tail[0] == "recordings" and tail[2] == "start":
                engine.start_recording(tail[1])
                return {}
            if len(tail) == 3 and tail[0] == "recordings" and tail[2] == "stop":
                return {"paths": [str(p) for p in engine.stop_recording(tail[1])]}
            if tail == ["events"]:
                ts = engine.submit_event(
                    kind=str(body.get("kind", "")),
                    tag=str(body.get("tag", "")),
                    type=body.get("type"),
                    payload=body.get("payload"),
                )
                return {"ts": ts}
        raise NotFound(self.path)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


class _ApiServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True


class _ApiServer6(_ApiServer):
    address_family = socket.AF_INET6


def _udp_socket(host: str, port: int) -> socket.socket:
    family = socket.AF_INET6 if ":" in host else socket.AF_INET
    sock = socket.socket(family, socket.SOCK_DGRAM)
    try:
        sock.bind((host, port))
    except OSError as exc:
        sock.close()
        if exc.errno == 98:  # EADDRINUSE
            raise PortInUse(f"udp {host}:{port}") from exc
        raise
    return sock


class GlassesSimulator:
    """Running simulator instance: discovery responder, session API
    server, and stream emitter around one :class:`DeviceEngine`."""

    def __init__(self, config: SimulatorConfig):
        self.config = config
        self.engine = DeviceEngine(config)
        self._stop = threading.Event()
        self._threads: List[threading.Thread] = []
        self._play_lock = threading.Lock()
        self._api_server: Optional[ThreadingHTTPServer] = None
        self._discovery_sock: Optional[socket.socket] = None
        self._stream_sock: Optional[socket.socket] = None
        self.started = False

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> "GlassesSimulator":
        Path(self.config.sd_root).mkdir(parents=True, exist_ok=True)
        host = self.config.host
        server_cls = _ApiServer6 if ":" in host else _ApiServer
        try:
            self._api_server = server_cls((host, self.config.api_port), _ApiHandler)
        except OSError as exc:
            if exc.errno == 98:
                raise PortInUse(f"tcp {host}:{self.config.api_port}") from exc
            raise
        self._api_server.engine = self.engine  # type: ignore[attr-defined]
        try:
            self._discovery_sock = _udp_socket(host, self.config.discovery_port)
            self._stream_sock = _udp_socket(host, self.config.stream_port)
        except BaseException:
            self._close_all()
            raise
        self.engine.datagram_sender = self._stream_sock.sendto
        self._discovery_sock.settimeout(0.2)
        self._stream_sock.settimeout(0.2)

        self._threads = [
            threading.Thread(target=self._api_server.serve_forever, daemon=True),
            threading.Thread(target=self._discovery_loop, daemon=True),
            threading.Thread(target=self._stream_listen_loop, daemon=True),
        ]
        if self.config.auto_scenario is not None:
            self._threads.append(threading.Thread(target=self._auto_play_loop, daemon=True))
        for t in self._threads:
            t.start()
        self.started = True
        logger.info(
            "simulator %s up: api=%d stream=%d discovery=%d",
            self.engine.device_id,
            self.api_port,
            self.stream_port,
            self.discovery_port,
        )
        return self

    def stop(self) -> None:
        if self._stop.is_set():
            return
        self._stop.set()
        if self._api_server is not None:
            self._api_server.shutdown()
        self._close_all()
        for t in self._threads:
            t.join(timeout=2.0)
        self.started = False

    def _close_all(self) -> None:
        if self._api_server is not None:
            self._api_server.server_close()
        for sock in (self._discovery_sock, self._stream_sock):
            if sock is not None:
                sock.close()

    def __enter__(self) -> "GlassesSimulator":
        if not self.started:
            self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- properties -----------------------------------------------------------

    @property
    def host(self) -> str:
        return self.config.host

    @property
    def api_port(self) -> int:
        return self._api_server.server_address[1]

    @property
    def stream_port(self) -> int:
        return self._stream_sock.getsockname()[1]

    @property
    def discovery_port(self) -> int:
        return self._discovery_sock.getsockname()[1]

    # -- servers ----------------------------------------------------------

    def _discovery_loop(self) -> None:
        response = {
            "type": "discover-resp",
            "id": self.engine.device_id,
            "ipv4": None if ":" in self.host else self.host,
            "ipv6": self.host if ":" in self.host else None,
            "ports": {
                "api": self.api_port,
                "stream": self.stream_port,
                "video": self.config.video_port,
            },
        }
        data = json.dumps(response).encode("utf-8")
        while not self._stop.is_set():
            try:
                raw, addr = self._discovery_sock.recvfrom(2048)
            except socket.timeout:
                continue
            except OSError:
                return
            try:
                probe = json.loads(raw.decode("utf-8"))
            except (ValueError, UnicodeDecodeError):
                continue
            if isinstance(probe, dict) and probe.get("type") == "discover":
                try:
                    self._discovery_sock.sendto(data, addr)
                except OSError:
                    pass

    def _stream_listen_loop(self) -> None:
        while not self._stop.is_set():
            try:
                raw, addr = self._stream_sock.recvfrom(2048)
            except socket.timeout:
                continue
            except OSError:
                return
            try:
                msg = json.loads(raw.decode("utf-8"))
            except (ValueError, UnicodeDecodeError):
                continue
            if (
                isinstance(msg, dict)
                and msg.get("type") == "live.data"
                and msg.get("op") == "keepalive"
            ):
                self.engine.register_keepalive(addr)

    def _auto_play_loop(self) -> None:
        while not self._stop.is_set():
            if self.engine.live_clients() or self.engine.active_recording_id is not None:
                try:
                    self.play_scenario(self.config.auto_scenario)
                except SimulatorStateError:
                    pass
            self._stop.wait(0.05)

    # -- playback ---------------------------------------------------------

    def play_scenario(
        self,
        scenario: Scenario,
        pace: Optional[bool] = None,
    ) -> List[LiveDataPacket]:
        """Emit one pass of a scenario; returns the exact packets emitted.

        Requires at least one live streaming client or an active
        recording. Emission is paced to the wall clock when a live client
        is attached (or when ``pace`` forces it); recording-only playback
        runs at full speed. Playback aborts early on simulator shutdown.
        """
        scenario.validate()
        with self._play_lock:
            engine = self.engine
            with engine._lock:
                live = engine.live_clients()
                if not live and engine.active_recording_id is None:
                    raise SimulatorStateError(
                        "no live streaming clients and no active recording"
                    )
                base = engine.clock_us
                packets, n_gaze = generate_scenario_packets(
                    scenario,
                    engine._rng,
                    clock_base_us=base,
                    gidx_base=engine._gidx,
                    wall_epoch_us=self.config.wall_epoch_us,
                )
                engine._gidx += n_gaze
            do_pace = bool(live) if pace is None else pace

            emitted: List[LiveDataPacket] = []
            wall_start = time.monotonic()
            for packet in packets:
                if self._stop.is_set():
                    break
                if do_pace:
                    deadline = wall_start + (packet.ts - base) / 1e6
                    delay = deadline - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
                engine.emit_packet(packet)
                emitted.append(packet)
            with engine._lock:
                end = base + scenario.duration_ms * 1000
                if engine.clock_us < end:
                    engine.clock_us = end
            return emitted

    def finalize_recording(self, recording_id: str) -> List[Path]:
        return self.engine.finalize_recording(recording_id)


def start_simulator(config: SimulatorConfig) -> GlassesSimulator:
    """Create and start a simulator; stop() it when done."""
    return GlassesSimulator(config).start()
