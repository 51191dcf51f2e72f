"""Shared fixtures: simulator factories, sessions, and the acceptance
summary lines printed at the end of a run."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # oracles/generators importable

from glasskit import SimulatorConfig, connect, start_simulator
from glasskit.controller import DeviceAddress


@pytest.fixture
def sim_factory(tmp_path):
    """Start simulators on ephemeral loopback ports; stops them at teardown."""
    started = []
    counter = [0]

    def factory(**overrides):
        counter[0] += 1
        defaults = dict(
            sd_root=tmp_path / f"sd{counter[0]}",
            host="127.0.0.1",
            seed=counter[0],
            calibration_delay_s=0.05,
        )
        defaults.update(overrides)
        sim = start_simulator(SimulatorConfig(**defaults))
        started.append(sim)
        return sim

    yield factory
    for sim in started:
        sim.stop()


@pytest.fixture
def sim(sim_factory):
    return sim_factory()


def session_for(sim, **kwargs):
    address = DeviceAddress(
        host=sim.host,
        api_port=sim.api_port,
        stream_port=sim.stream_port,
        video_port=sim.config.video_port,
    )
    return connect(address, **kwargs)


@pytest.fixture
def session(sim):
    s = session_for(sim)
    yield s
    s.close()


def run_listing_flow(sim, session, project="demo", participant="P01"):
    """Project -> participant -> calibration -> recording chain."""
    project_id = session.create_project(project)
    participant_id = session.create_participant(project_id, participant)
    calibration_id = session.create_calibration(project_id, participant_id)
    session.start_calibration(calibration_id)
    assert session.wait_until_calibration_is_done(calibration_id, timeout_ms=5000)
    recording_id = session.create_recording(participant_id)
    return project_id, participant_id, calibration_id, recording_id


# -- acceptance reporting ----------------------------------------------------

_acceptance_results = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _acceptance_results[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance_results):
        outcome = _acceptance_results[name]
        mark = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{mark}  {name}")
