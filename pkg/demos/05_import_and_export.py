#!/usr/bin/env python3
"""Import a stored recording from an SD-card tree and export it to CSV.

Uses the sample recording bundled with the repository under data/.
rawdata.csv gets every valid sample (gaze, eye, inertial, events, sync);
fdata.csv gets the fixations found by the dispersion-threshold filter.
"""

import tempfile
from pathlib import Path

from glasskit import IdtConfig, export_fixations_csv, export_raw_csv, load_recording, scan_projects

data_root = Path(__file__).resolve().parent.parent / "data"

print(f"projects under {data_root}:")
for info in scan_projects(data_root):
    print(f"  {info.project_id}  name={info.name!r}  recordings={info.recording_count}")

ref, store = load_recording(data_root, project_id="xejxnds", recording_id="k3l4jms")
print(
    f"loaded recording {ref.recording_id} of {ref.metadata['participant_name']} "
    f"({store.counters['accepted']} valid samples)"
)

out = Path(tempfile.mkdtemp())
raw_rows = export_raw_csv(store, out / "rawdata.csv")
fix_rows = export_fixations_csv(
    store,
    IdtConfig(dispersion_threshold=5, duration_threshold=100),
    out / "fdata.csv",
)
print(f"wrote {out / 'rawdata.csv'} ({raw_rows} rows)")
print(f"wrote {out / 'fdata.csv'} ({fix_rows} fixations)")
