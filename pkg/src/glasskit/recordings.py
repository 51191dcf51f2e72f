"""Importing stored recordings from an SD-card directory tree.

The tree layout is the one the device writes:
``<root>/projects/<project_id>/recordings/<recording_id>/segments/<n>/livedata.json.gz``
with ``project.json`` / ``participant.json`` / ``recording.json``
metadata alongside. All operations are read-only; missing metadata
degrades to id-only information with a warning instead of failing.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple

from .config import DEFAULT_REORDER_WINDOW_US
from .errors import NotFound
from .gazedata import GazeDataStore
from .livedata import parse_livedata_file

logger = logging.getLogger(__name__)


class ProjectInfo(NamedTuple):
    project_id: str
    name: str
    recording_count: int


@dataclass
class RecordingRef:
    """Locator and metadata for one stored recording."""

    project_dir: Path
    project_id: str
    recording_id: str
    segments: List[Path] = field(default_factory=list)
    metadata: Dict[str, Optional[str]] = field(default_factory=dict)
    parse_errors: List[Tuple[Path, int, str]] = field(default_factory=list)


def _read_json(path: Path) -> Optional[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        if not isinstance(obj, dict):
            raise ValueError("not a JSON object")
        return obj
    except FileNotFoundError:
        return None
    except (ValueError, OSError) as exc:
        logger.warning("unreadable metadata %s: %s", path, exc)
        return None


def scan_projects(root) -> List[ProjectInfo]:
    """List projects under ``<root>/projects`` that carry valid metadata.

    Malformed project directories are logged and skipped. Raises
    FileNotFoundError when the root itself does not exist.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"project root {root} does not exist")
    projects_dir = root / "projects"
    if not projects_dir.is_dir():
        return []
    found = []
    for entry in sorted(projects_dir.iterdir()):
        if not entry.is_dir():
            continue
        meta = _read_json(entry / "project.json")
        if meta is None or "id" not in meta:
            logger.warning("skipping project directory %s: missing or bad project.json", entry)
            continue
        recordings_dir = entry / "recordings"
        count = (
            sum(1 for r in recordings_dir.iterdir() if r.is_dir())
            if recordings_dir.is_dir()
            else 0
        )
        found.append(ProjectInfo(entry.name, str(meta.get("name", "")), count))
    return found


def find_recording(root, project_id: str, recording_id: str) -> RecordingRef:
    """Locate a recording and gather its metadata without loading data."""
    root = Path(root)
    project_dir = root / "projects" / project_id
    if not project_dir.is_dir():
        raise NotFound(f"project {project_id!r} under {root}")
    rec_dir = project_dir / "recordings" / recording_id
    if not rec_dir.is_dir():
        raise NotFound(f"recording {recording_id!r} in project {project_id!r}")

    segments_dir = rec_dir / "segments"
    segment_dirs = (
        sorted(
            (d for d in segments_dir.iterdir() if d.is_dir()),
            key=lambda d: (not d.name.isdigit(), int(d.name) if d.name.isdigit() else d.name),
        )
        if segments_dir.is_dir()
        else []
    )
    segments = [d / "livedata.json.gz" for d in segment_dirs]
    if not segments:
        raise NotFound(f"recording {recording_id!r} has no segments")
    for livedata in segments:
        if not livedata.is_file():
            raise FileNotFoundError(f"missing livedata file {livedata}")

    metadata: Dict[str, Optional[str]] = {
        "project_name": None,
        "participant_name": None,
        "created_utc": None,
    }
    project_meta = _read_json(project_dir / "project.json")
    if project_meta is None:
        logger.warning("recording %s: no readable project.json", recording_id)
    else:
        metadata["project_name"] = project_meta.get("name")
    participant_meta = _read_json(rec_dir / "participant.json")
    if participant_meta is None:
        logger.warning("recording %s: no readable participant.json", recording_id)
    else:
        metadata["participant_name"] = participant_meta.get("name")
    recording_meta = _read_json(rec_dir / "recording.json")
    if recording_meta is None:
        logger.warning("recording %s: no readable recording.json", recording_id)
    else:
        metadata["created_utc"] = recording_meta.get("created_utc")

    return RecordingRef(
        project_dir=root,
        project_id=project_id,
        recording_id=recording_id,
        segments=segments,
        metadata=metadata,
    )


def load_recording(
    root,
    project_id: str,
    recording_id: str,
    reorder_window_us: int = DEFAULT_REORDER_WINDOW_US,
) -> Tuple[RecordingRef, GazeDataStore]:
    """Parse every segment of a recording into a fresh store.

    The store applies the usual validity and expiry rules, so its
    counters reflect the file contents. Malformed lines are collected on
    the returned ref and logged, not fatal.
    """
    ref = find_recording(root, project_id, recording_id)
    store = GazeDataStore(reorder_window_us=reorder_window_us)
    for livedata in ref.segments:
        errors: List[tuple] = []
        for packet in parse_livedata_file(livedata, errors=errors):
            store.ingest(packet)
        for lineno, message in errors:
            ref.parse_errors.append((livedata, lineno, message))
            logger.warning("%s: line %d: %s", livedata, lineno, message)
    return ref, store
