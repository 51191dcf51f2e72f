#!/usr/bin/env python3
"""The full recording workflow: project, participant, calibration,
recording, events, and the files that end up on the SD card.

A recording needs a successful calibration for its participant; the
simulator is configured to calibrate successfully here. Both event
mechanisms are shown: free-text logged events and typed events for
downstream analysis tools.
"""

import tempfile
import time

from glasskit import (
    DeviceAddress,
    Scenario,
    ScenarioSegment,
    SimulatorConfig,
    connect,
    start_simulator,
)

scenario = Scenario(
    sample_rate_hz=100,
    duration_ms=600,
    segments=(ScenarioSegment(0, 600, target=(0.5, 0.5), noise_std=0.005),),
)

with tempfile.TemporaryDirectory() as tmp:
    sim = start_simulator(
        SimulatorConfig(sd_root=tmp, seed=3, calibration_delay_s=0.1)
    )
    session = connect(
        DeviceAddress(host=sim.host, api_port=sim.api_port, stream_port=sim.stream_port)
    )

    project_id = session.create_project("demo-study")
    participant_id = session.create_participant(project_id, "P01")
    calibration_id = session.create_calibration(project_id, participant_id)
    session.start_calibration(calibration_id)
    if not session.wait_until_calibration_is_done(calibration_id):
        print("Calibration failed!")
        raise SystemExit(1)
    print("calibration succeeded")

    recording_id = session.create_recording(participant_id)
    session.start_streaming()
    session.start_recording(recording_id)

    session.send_logged_event("recording_start")
    session.send_custom_event("recording_event", "start")

    sim.play_scenario(scenario)  # blocks for the scenario duration
    time.sleep(0.1)

    session.send_logged_event("recording_stop")
    session.send_custom_event("recording_event", "stop")
    session.stop_recording(recording_id)
    session.stop_streaming()
    print(f"recording {recording_id} stored; files on the SD card:")
    for path in sim.finalize_recording(recording_id):
        print(f"  {path}")

    session.close()
    sim.stop()
