#!/usr/bin/env python3
"""Find a device on the network and open a session.

Self-contained: spins up the bundled simulator on loopback first, then
discovers it the same way a real deployment would. Point the discovery
at your own network by dropping the simulator block and the explicit
target list.
"""

import tempfile

from glasskit import PortConfig, SimulatorConfig, connect, discover, start_simulator

with tempfile.TemporaryDirectory() as tmp:
    sim = start_simulator(SimulatorConfig(sd_root=tmp, seed=1))
    print(f"simulator up (api={sim.api_port}, discovery={sim.discovery_port})")

    # Probe loopback; without `interfaces` every broadcast address is tried.
    address = discover(
        timeout_ms=2000,
        interfaces=["127.0.0.1"],
        ports=PortConfig(discovery=sim.discovery_port),
    )
    print(f"found device at {address.host} (api port {address.api_port})")

    session = connect(address)
    print(f"connected to {session.device_id}")
    print(f"scene camera stream would be at: {session.live_scene_url()}")

    session.close()
    sim.stop()
    print("done")
