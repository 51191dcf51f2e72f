"""Offline mapping from video frame timestamps to gaze pixels.

Sync packets pair the gaze clock (``ts``) with the video presentation
clock (``vts``). A frame timestamp is converted to gaze time through the
nearest preceding sync packet, then matched to the closest valid gaze
sample in time.
"""

from __future__ import annotations

import bisect
from typing import Tuple

from .errors import NoGaze, NoSync
from .gazedata import CHANNEL_GAZE2D, CHANNEL_SYNC, GazeDataStore


def map_gaze_to_frame(
    store: GazeDataStore,
    frame_ts: int,
    frame_size: Tuple[int, int],
) -> Tuple[float, float, int]:
    """Pixel position of gaze at a video frame timestamp.

    Returns (x_px, y_px, gaze_ts) for the valid gaze sample nearest in
    time to the frame, with ties resolved toward the earlier sample.
    Frames earlier than every sync packet are clamped to the first one.

    Raises NoSync / NoGaze when the store lacks sync packets or valid
    gaze samples.
    """
    syncs = store.channel(CHANNEL_SYNC)
    if not syncs:
        raise NoSync("store contains no sync packets")
    gaze = store.channel(CHANNEL_GAZE2D)
    if not gaze:
        raise NoGaze("store contains no valid gaze samples")

    syncs = sorted(syncs, key=lambda p: (p.vts, p.ts))
    vts_list = [p.vts for p in syncs]
    at = bisect.bisect_right(vts_list, frame_ts) - 1
    sync = syncs[max(at, 0)]
    gaze_ts = sync.ts + (frame_ts - sync.vts)

    ts_list = [p.ts for p in gaze]
    i = bisect.bisect_left(ts_list, gaze_ts)
    if i == 0:
        chosen = gaze[0]
    elif i == len(ts_list):
        chosen = gaze[-1]
    else:
        left_d = gaze_ts - ts_list[i - 1]
        right_d = ts_list[i] - gaze_ts
        chosen = gaze[i - 1] if left_d <= right_d else gaze[i]

    w, h = frame_size
    return (chosen.gp[0] * w, chosen.gp[1] * h, chosen.ts)
