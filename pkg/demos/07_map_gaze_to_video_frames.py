#!/usr/bin/env python3
"""Map scene-video frame timestamps to gaze pixels, offline.

Sync packets in a recording pair the gaze clock with the video
presentation clock. For any frame timestamp the nearest valid gaze
sample is looked up and scaled to pixel coordinates, which is all an
overlay renderer needs. Uses the bundled sample recording.
"""

from pathlib import Path

from glasskit import load_recording, map_gaze_to_frame

data_root = Path(__file__).resolve().parent.parent / "data"
ref, store = load_recording(data_root, project_id="xejxnds", recording_id="k3l4jms")

syncs = store.channel("sync")
print(f"recording has {len(syncs)} sync packets, "
      f"{len(store.channel('gaze2d'))} valid gaze samples")

frame_size = (1920, 1080)
first_vts = syncs[0].vts
for frame_no in range(0, 50, 10):
    frame_ts = first_vts + frame_no * 40_000  # 25 fps video
    x, y, gaze_ts = map_gaze_to_frame(store, frame_ts, frame_size)
    print(
        f"frame {frame_no:>3} (vts {frame_ts:>9} us) -> "
        f"pixel ({x:7.1f}, {y:7.1f}) from gaze sample at {gaze_ts} us"
    )
