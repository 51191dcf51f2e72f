"""Typed live-data packets and their wire format.

The device emits newline-delimited JSON objects, one per sample, both on
the UDP data stream and in the ``livedata.json.gz`` file of a stored
recording. Every modeled packet carries a microsecond timestamp ``ts``
and a status flag ``s`` (0 = valid, any nonzero code = anomaly). The
exact key set per packet kind is normative and documented in
``docs/wire-format.md``.

Parsing is total over syntactically valid JSON objects: anything that
does not match a known packet kind (unknown keys, wrong value shapes)
becomes an :class:`UnknownPacket` that round-trips byte-identically.
"""

from __future__ import annotations

import gzip
import json
import logging
import math
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Tuple, Union

from .errors import MalformedText

logger = logging.getLogger(__name__)

EYE_LEFT = "left"
EYE_RIGHT = "right"
IMU_ACCELEROMETER = "accelerometer"
IMU_GYROSCOPE = "gyroscope"

Vec2 = Tuple[float, float]
Vec3 = Tuple[float, float, float]


@dataclass(frozen=True)
class GazePosition2D:
    """Point of regard in scene-camera-normalized coordinates.

    ``gp`` is present whenever the sample is valid (s == 0); invalid
    samples may omit it. ``gidx`` increases monotonically over a
    connected stream.
    """

    ts: int
    s: int
    gidx: int
    gp: Optional[Vec2] = None


@dataclass(frozen=True)
class GazePosition3D:
    """Gaze point in millimeters in the scene-camera frame."""

    ts: int
    s: int
    gp3: Optional[Vec3] = None


@dataclass(frozen=True)
class EyeSample:
    """Per-eye pupil center (mm), pupil diameter (mm) and gaze direction
    unit vector."""

    ts: int
    s: int
    eye: str
    pc: Optional[Vec3] = None
    pd: Optional[float] = None
    gd: Optional[Vec3] = None


@dataclass(frozen=True)
class ImuSample:
    """Inertial sample: m/s^2 for accelerometer, deg/s for gyroscope."""

    ts: int
    s: int
    kind: str
    v: Optional[Vec3] = None


@dataclass(frozen=True)
class LoggedEvent:
    """Free-text trigger logged into the recording."""

    ts: int
    s: int
    tag: str
    payload: Optional[str] = None


@dataclass(frozen=True)
class CustomApiEvent:
    """Structured event for downstream analysis tools; ``ets`` is the
    device wall-clock timestamp in microseconds."""

    ts: int
    s: int
    ets: int
    type: str
    tag: str


@dataclass(frozen=True)
class SyncPacket:
    """Pairs a gaze-clock timestamp with a video presentation timestamp
    (both microseconds); anchors offline video/gaze alignment."""

    ts: int
    s: int
    vts: int


@dataclass(frozen=True)
class UnknownPacket:
    """Fallback for unmodeled objects; ``raw`` is the verbatim source
    line and is re-emitted byte-identically."""

    raw: str
    ts: Optional[int] = None


LiveDataPacket = Union[
    GazePosition2D,
    GazePosition3D,
    EyeSample,
    ImuSample,
    LoggedEvent,
    CustomApiEvent,
    SyncPacket,
    UnknownPacket,
]


def _is_uint(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def _is_finite_num(v) -> bool:
    return (
        isinstance(v, (int, float))
        and not isinstance(v, bool)
        and math.isfinite(v)
    )


def _as_vec(v, n: int):
    """Coerce a JSON array of n finite numbers to a float tuple, else None."""
    if not isinstance(v, list) or len(v) != n:
        return None
    if not all(_is_finite_num(c) for c in v):
        return None
    return tuple(float(c) for c in v)


def _parse_gaze2d(obj):
    if not _is_uint(obj["gidx"]):
        return None
    gp = None
    if "gp" in obj:
        gp = _as_vec(obj["gp"], 2)
        if gp is None:
            return None
    elif obj["s"] == 0:
        return None  # valid samples must carry coordinates
    return GazePosition2D(ts=obj["ts"], s=obj["s"], gidx=obj["gidx"], gp=gp)


def _parse_gaze3d(obj):
    gp3 = None
    if obj["gp3"] is not None:
        gp3 = _as_vec(obj["gp3"], 3)
        if gp3 is None:
            return None
    elif obj["s"] == 0:
        return None
    return GazePosition3D(ts=obj["ts"], s=obj["s"], gp3=gp3)


def _parse_eye(obj):
    if obj["eye"] not in (EYE_LEFT, EYE_RIGHT):
        return None
    pc = _as_vec(obj["pc"], 3) if "pc" in obj else None
    gd = _as_vec(obj["gd"], 3) if "gd" in obj else None
    pd = obj.get("pd")
    if pd is not None:
        if not _is_finite_num(pd):
            return None
        pd = float(pd)
    if ("pc" in obj and pc is None) or ("gd" in obj and gd is None):
        return None
    if obj["s"] == 0 and (pc is None or pd is None or gd is None):
        return None
    return EyeSample(ts=obj["ts"], s=obj["s"], eye=obj["eye"], pc=pc, pd=pd, gd=gd)


def _parse_imu(key, kind):
    def parse(obj):
        v = None
        if obj[key] is not None:
            v = _as_vec(obj[key], 3)
            if v is None:
                return None
        elif obj["s"] == 0:
            return None
        return ImuSample(ts=obj["ts"], s=obj["s"], kind=kind, v=v)

    return parse


def _parse_logged(obj):
    tag = obj["tag"]
    if not isinstance(tag, str) or not tag:
        return None
    payload = obj.get("payload")
    if payload is not None and not isinstance(payload, str):
        return None
    return LoggedEvent(ts=obj["ts"], s=obj["s"], tag=tag, payload=payload)


def _parse_custom(obj):
    if not _is_uint(obj["ets"]):
        return None
    if not isinstance(obj["type"], str) or not obj["type"]:
        return None
    if not isinstance(obj["tag"], str):
        return None
    return CustomApiEvent(
        ts=obj["ts"], s=obj["s"], ets=obj["ets"], type=obj["type"], tag=obj["tag"]
    )


def _parse_sync(obj):
    if not _is_uint(obj["vts"]):
        return None
    return SyncPacket(ts=obj["ts"], s=obj["s"], vts=obj["vts"])


# (required keys, optional keys, parser); first full match wins. All
# variants implicitly require ts and s.
_VARIANTS = (
    (frozenset({"gidx"}), frozenset({"gp"}), _parse_gaze2d),
    (frozenset({"gp3"}), frozenset(), _parse_gaze3d),
    (frozenset({"eye"}), frozenset({"pc", "pd", "gd"}), _parse_eye),
    (frozenset({"ac"}), frozenset(), _parse_imu("ac", IMU_ACCELEROMETER)),
    (frozenset({"gy"}), frozenset(), _parse_imu("gy", IMU_GYROSCOPE)),
    (frozenset({"ets", "type", "tag"}), frozenset(), _parse_custom),
    (frozenset({"tag"}), frozenset({"payload"}), _parse_logged),
    (frozenset({"vts"}), frozenset(), _parse_sync),
)

_BASE_KEYS = frozenset({"ts", "s"})


def parse_packet(line: str) -> LiveDataPacket:
    """Parse one wire line into its typed packet.

    Objects that do not match any known packet kind fall back to
    :class:`UnknownPacket`; only text that fails to parse as a JSON
    object raises :class:`MalformedText`.
    """
    text = line.strip()
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedText(f"not a JSON object: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedText(f"expected a JSON object, got {type(obj).__name__}")

    keys = frozenset(obj)
    unknown_ts = obj.get("ts") if _is_uint(obj.get("ts")) else None
    if not (_is_uint(obj.get("ts")) and _is_uint(obj.get("s"))):
        return UnknownPacket(raw=text, ts=unknown_ts)
    for required, optional, parse in _VARIANTS:
        if required <= keys and keys <= (_BASE_KEYS | required | optional):
            packet = parse(obj)
            if packet is not None:
                return packet
    return UnknownPacket(raw=text, ts=unknown_ts)


def serialize_packet(p: LiveDataPacket) -> str:
    """Emit one line of wire text; inverse of :func:`parse_packet`."""
    if isinstance(p, UnknownPacket):
        return p.raw
    obj: dict = {"ts": p.ts, "s": p.s}
    if isinstance(p, GazePosition2D):
        obj["gidx"] = p.gidx
        if p.gp is not None:
            obj["gp"] = list(p.gp)
    elif isinstance(p, GazePosition3D):
        obj["gp3"] = list(p.gp3) if p.gp3 is not None else None
    elif isinstance(p, EyeSample):
        obj["eye"] = p.eye
        if p.pc is not None:
            obj["pc"] = list(p.pc)
        if p.pd is not None:
            obj["pd"] = p.pd
        if p.gd is not None:
            obj["gd"] = list(p.gd)
    elif isinstance(p, ImuSample):
        key = "ac" if p.kind == IMU_ACCELEROMETER else "gy"
        obj[key] = list(p.v) if p.v is not None else None
    elif isinstance(p, LoggedEvent):
        obj["tag"] = p.tag
        if p.payload is not None:
            obj["payload"] = p.payload
    elif isinstance(p, CustomApiEvent):
        obj["ets"] = p.ets
        obj["type"] = p.type
        obj["tag"] = p.tag
    elif isinstance(p, SyncPacket):
        obj["vts"] = p.vts
    else:
        raise TypeError(f"not a live-data packet: {type(p).__name__}")
    return json.dumps(obj, separators=(",", ":"))


def parse_livedata_file(
    path: str | os.PathLike,
    errors: Optional[list] = None,
) -> Iterator[LiveDataPacket]:
    """Stream packets from a gzip-compressed newline-delimited file.

    Packets are yielded in file order. A malformed line is reported as a
    ``(line_number, message)`` pair appended to ``errors`` (or logged as
    a warning when ``errors`` is None) and the rest of the file is still
    processed. OSError and gzip.BadGzipFile propagate.
    """
    with gzip.open(path, "rt", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield parse_packet(line)
            except MalformedText as exc:
                if errors is not None:
                    errors.append((lineno, str(exc)))
                else:
                    logger.warning("%s: line %d: %s", path, lineno, exc)


def write_livedata_file(path: str | os.PathLike, packets: Iterable[LiveDataPacket]) -> int:
    """Write packets as a deterministic livedata file; returns line count.

    The gzip header timestamp is pinned to zero so identical packet
    sequences produce byte-identical files.
    """
    body = "".join(serialize_packet(p) + "\n" for p in packets)
    data = gzip.compress(body.encode("utf-8"), mtime=0)
    with open(path, "wb") as fh:
        fh.write(data)
    return body.count("\n")
