#!/usr/bin/env python3
"""Browse what is stored on the device: projects, their recordings, and
each recording's segments with absolute storage paths."""

import tempfile

from glasskit import (
    DeviceAddress,
    Scenario,
    ScenarioSegment,
    SimulatorConfig,
    connect,
    start_simulator,
)

with tempfile.TemporaryDirectory() as tmp:
    sim = start_simulator(SimulatorConfig(sd_root=tmp, seed=4, calibration_delay_s=0.05))
    session = connect(
        DeviceAddress(host=sim.host, api_port=sim.api_port, stream_port=sim.stream_port)
    )

    # quickly produce one stored recording to look at
    project_id = session.create_project("catalog-demo")
    participant_id = session.create_participant(project_id, "P01")
    calibration_id = session.create_calibration(project_id, participant_id)
    session.start_calibration(calibration_id)
    session.wait_until_calibration_is_done(calibration_id)
    recording_id = session.create_recording(participant_id)
    session.start_recording(recording_id)
    sim.play_scenario(
        Scenario(100, 200, (ScenarioSegment(0, 200, (0.5, 0.5)),)), pace=False
    )
    session.stop_recording(recording_id)

    for project in session.get_projects():
        print(f"project {project['id']}  name={project['name']!r}  path={project['path']}")
        for recording in session.get_recordings(project["id"]):
            print(f"  recording {recording['id']}  state={recording['state']}")
            print(f"    path: {recording['path']}")
            for segment in session.get_segments(recording["id"]):
                print(f"    segment {segment['id']}: {segment['livedata']}")

    session.close()
    sim.stop()
