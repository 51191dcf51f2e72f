"""Simulator tests: determinism, scenario playback, SD layout, state
machines, keep-alive gating."""

from __future__ import annotations

import gzip
import json
import socket
import time

import pytest

from glasskit import (
    ApiError,
    GazePosition2D,
    NotCalibrated,
    PortInUse,
    Scenario,
    ScenarioInvalid,
    ScenarioSegment,
    ScheduledEvent,
    SimulatorConfig,
    SimulatorStateError,
    parse_livedata_file,
    parse_packet,
    start_simulator,
)
from glasskit.simulator import generate_scenario_packets
import numpy as np

from conftest import run_listing_flow, session_for


def noiseless_scenario(duration_ms=100, rate=100, target=(0.5, 0.5)):
    return Scenario(
        sample_rate_hz=rate,
        duration_ms=duration_ms,
        segments=(ScenarioSegment(0, duration_ms, target, 0.0, 1.0),),
    )


def recording_sink(sim, session):
    """Start a recording so playback has somewhere to go; returns its id."""
    _, _, _, rid = run_listing_flow(sim, session)
    session.start_recording(rid)
    return rid


class TestScenarioValidation:
    def test_rate_must_be_supported(self):
        with pytest.raises(ScenarioInvalid):
            Scenario(60, 100, ()).validate()

    def test_segments_must_fit_and_not_overlap(self):
        with pytest.raises(ScenarioInvalid):
            Scenario(100, 100, (ScenarioSegment(0, 200, (0.5, 0.5)),)).validate()
        with pytest.raises(ScenarioInvalid):
            Scenario(
                100,
                300,
                (ScenarioSegment(0, 200, (0.5, 0.5)), ScenarioSegment(100, 300, (0.5, 0.5))),
            ).validate()

    def test_validity_rate_bounds(self):
        with pytest.raises(ScenarioInvalid):
            Scenario(
                100, 100, (ScenarioSegment(0, 100, (0.5, 0.5), validity_rate=1.5),)
            ).validate()

    def test_custom_event_needs_type(self):
        with pytest.raises(ScenarioInvalid):
            Scenario(
                100, 100, (), event_schedule=(ScheduledEvent(10, "custom", "tag"),)
            ).validate()

    def test_round_trips_through_json(self):
        scenario = Scenario(
            100,
            500,
            (ScenarioSegment(0, 300, (0.3, 0.4), 0.01, 0.9),),
            (ScheduledEvent(50, "logged", "marker", payload="p"),),
        )
        assert Scenario.from_dict(json.loads(json.dumps(scenario.to_dict()))) == scenario


class TestGenerator:
    def test_noiseless_segment_hits_target_exactly(self):
        packets, n = generate_scenario_packets(
            noiseless_scenario(), np.random.default_rng(0)
        )
        gaze = [p for p in packets if isinstance(p, GazePosition2D)]
        assert n == 10 and len(gaze) == 10
        assert all(p.s == 0 and p.gp == (0.5, 0.5) for p in gaze)

    def test_validity_mask_is_exact(self):
        scenario = Scenario(
            100,
            10_000,
            (ScenarioSegment(0, 10_000, (0.5, 0.5), 0.0, 0.8),),
        )
        packets, n = generate_scenario_packets(scenario, np.random.default_rng(42))
        gaze = [p for p in packets if isinstance(p, GazePosition2D)]
        assert n == 1000
        invalid = [p for p in gaze if p.s != 0]
        assert len(invalid) == 200
        assert all(p.gp is None for p in invalid)

    def test_timestamps_strictly_increase(self):
        scenario = Scenario(
            100,
            400,
            (
                ScenarioSegment(0, 200, (0.3, 0.3)),
                ScenarioSegment(200, 400, (0.7, 0.7)),
            ),
            (ScheduledEvent(0, "logged", "start"), ScheduledEvent(200, "logged", "mid")),
        )
        packets, _ = generate_scenario_packets(scenario, np.random.default_rng(1))
        ts = [p.ts for p in packets]
        assert all(b > a for a, b in zip(ts, ts[1:]))

    def test_every_packet_parses_back(self):
        from glasskit import serialize_packet

        scenario = Scenario(
            50,
            1000,
            (ScenarioSegment(0, 1000, (0.2, 0.8), 0.02, 0.7),),
            (ScheduledEvent(500, "custom", "cond-a", type="condition"),),
        )
        packets, _ = generate_scenario_packets(scenario, np.random.default_rng(2))
        for p in packets:
            assert parse_packet(serialize_packet(p)) == p


class TestLifecycleStateMachine:
    def test_calibration_outcomes(self, sim_factory):
        for outcome, expected in (("success", "calibrated"), ("fail", "failed")):
            sim = sim_factory(calibration_outcome=outcome, calibration_delay_s=0.0)
            engine = sim.engine
            pid = engine.create_project("p")["id"]
            ppid = engine.create_participant(pid, "x")["id"]
            cid = engine.create_calibration(pid, ppid)["id"]
            assert engine.calibration_status(cid) == "created"
            engine.start_calibration(cid)
            deadline = time.monotonic() + 2
            while engine.calibration_status(cid) == "calibrating":
                assert time.monotonic() < deadline
                time.sleep(0.01)
            assert engine.calibration_status(cid) == expected

    def test_recording_requires_calibrated_participant(self, sim):
        engine = sim.engine
        pid = engine.create_project("p")["id"]
        ppid = engine.create_participant(pid, "x")["id"]
        rid = engine.create_recording(ppid)["id"]
        with pytest.raises(NotCalibrated):
            engine.start_recording(rid)

    def test_stop_twice_is_an_api_error(self, sim, session):
        rid = recording_sink(sim, session)
        session.stop_recording(rid)
        with pytest.raises(ApiError):
            session.stop_recording(rid)

    def test_single_active_recording(self, sim, session):
        _, ppid, _, rid = run_listing_flow(sim, session)
        session.start_recording(rid)
        rid2 = session.create_recording(ppid)
        with pytest.raises(ApiError):
            session.start_recording(rid2)
        session.stop_recording(rid)


class TestPlayback:
    def test_playback_needs_a_sink(self, sim):
        with pytest.raises(SimulatorStateError):
            sim.play_scenario(noiseless_scenario())

    def test_recording_only_playback_is_unpaced(self, sim, session):
        rid = recording_sink(sim, session)
        t0 = time.monotonic()
        log = sim.play_scenario(noiseless_scenario(duration_ms=2000, rate=50))
        assert time.monotonic() - t0 < 1.0
        session.stop_recording(rid)
        assert len(log) == 100 * 4  # 100 ticks, 4 packets each

    def test_capture_log_matches_play_log(self, sim, session):
        rid = recording_sink(sim, session)
        log = sim.play_scenario(noiseless_scenario())
        session.stop_recording(rid)
        assert sim.engine.recording_log(rid) == log


class TestSdTree:
    def test_finalize_writes_parseable_livedata(self, sim, session, tmp_path):
        rid = recording_sink(sim, session)
        log = sim.play_scenario(noiseless_scenario())
        session.stop_recording(rid)
        paths = sim.finalize_recording(rid)
        livedata = [p for p in paths if p.name == "livedata.json.gz"][0]
        assert livedata.exists()
        assert "segments" in str(livedata)
        loaded = list(parse_livedata_file(livedata))
        assert len(loaded) == len(sim.engine.recording_log(rid))

    def test_finalize_before_start_is_an_error(self, sim, session):
        _, _, _, rid = run_listing_flow(sim, session)
        with pytest.raises(SimulatorStateError):
            sim.finalize_recording(rid)

    def test_two_recordings_are_sibling_directories(self, sim, session):
        pid, ppid, _, rid1 = run_listing_flow(sim, session)
        session.start_recording(rid1)
        sim.play_scenario(noiseless_scenario())
        session.stop_recording(rid1)
        rid2 = session.create_recording(ppid)
        session.start_recording(rid2)
        sim.play_scenario(noiseless_scenario())
        session.stop_recording(rid2)
        rec_root = sim.config.sd_root / "projects" / pid / "recordings"
        assert sorted(d.name for d in rec_root.iterdir()) == sorted([rid1, rid2])

    def test_same_seed_same_bytes(self, sim_factory):
        livedatas = []
        for run in range(2):
            sim = sim_factory(seed=123)
            session = session_for(sim)
            rid = recording_sink(sim, session)
            sim.play_scenario(
                Scenario(
                    100,
                    300,
                    (ScenarioSegment(0, 300, (0.4, 0.6), 0.01, 0.9),),
                    (ScheduledEvent(150, "logged", "mark"),),
                )
            )
            session.stop_recording(rid)
            paths = sim.finalize_recording(rid)
            livedatas.append([p for p in paths if p.name == "livedata.json.gz"][0].read_bytes())
            session.close()
        assert livedatas[0] == livedatas[1]


class TestPorts:
    def test_same_port_twice_raises(self, sim_factory, tmp_path):
        first = sim_factory()
        with pytest.raises(PortInUse):
            start_simulator(
                SimulatorConfig(sd_root=tmp_path / "dup", stream_port=first.stream_port)
            )


class TestKeepAliveGating:
    def test_stale_clients_are_pruned_and_skipped(self, sim):
        engine = sim.engine
        addr = ("127.0.0.1", 50_000)
        engine.register_keepalive(addr)
        assert engine.live_clients() == [addr]
        engine.clients[addr] = time.monotonic() - 3.5  # older than the cutoff
        assert engine.live_clients() == []

    def test_raw_keepalive_starts_and_stops_the_stream(self, sim):
        # speak the stream protocol directly, no controller involved
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.bind(("127.0.0.1", 0))
        sock.settimeout(0.5)
        sock.sendto(b'{"type":"live.data","op":"keepalive"}', (sim.host, sim.stream_port))
        time.sleep(0.05)
        assert len(sim.engine.live_clients()) == 1
        log = sim.play_scenario(noiseless_scenario(duration_ms=100), pace=False)
        received = []
        try:
            while True:
                raw, _ = sock.recvfrom(65535)
                received.append(parse_packet(raw.decode()))
        except socket.timeout:
            pass
        assert len(received) == len(log)
        # expire the client; further playback must not reach the socket
        sim.engine.clients.clear()
        with pytest.raises(SimulatorStateError):
            sim.play_scenario(noiseless_scenario(duration_ms=100))
        sock.close()
