#!/usr/bin/env python3
"""Stream live gaze data and poll the latest samples.

Starts the simulator with a one-second scripted gaze timeline, opens a
streaming session, and polls get_data() while packets arrive. The
session keeps the stream alive in the background; the device stops
sending three seconds after keep-alives stop.
"""

import tempfile
import threading
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
    duration_ms=1000,
    segments=(
        ScenarioSegment(0, 500, target=(0.25, 0.25), noise_std=0.004),
        ScenarioSegment(500, 1000, target=(0.75, 0.6), noise_std=0.004),
    ),
)

with tempfile.TemporaryDirectory() as tmp:
    sim = start_simulator(SimulatorConfig(sd_root=tmp, seed=2))
    session = connect(
        DeviceAddress(host=sim.host, api_port=sim.api_port, stream_port=sim.stream_port)
    )

    session.start_streaming()
    time.sleep(0.2)  # first keep-alive makes the client eligible for data

    player = threading.Thread(target=sim.play_scenario, args=(scenario,))
    player.start()

    for _ in range(5):
        time.sleep(0.25)
        snap = session.get_data()
        if snap.gaze2d is not None:
            x, y = snap.gaze2d.gp
            print(f"t={snap.gaze2d.ts:>8} us  gaze=({x:.3f}, {y:.3f})")
        else:
            print("no gaze yet")

    player.join()
    session.stop_streaming()
    print(f"stored samples per outcome: {session.store.counters}")
    session.close()
    sim.stop()
