"""Command-line front door: discover, record, export, simulate.

Thin wrappers over the library with fixed exit codes: 0 success,
1 generic failure (e.g. calibration failed), 2 usage, 3 network,
4 not found, 5 I/O.
"""

from __future__ import annotations

import argparse
import signal
import sys
import time

from .config import load_ports
from .controller import DeviceAddress, Session, connect, discover
from .errors import (
    ApiError,
    ConnectFailed,
    DiscoveryTimeout,
    GlassKitError,
    InvalidAddress,
    NotFound,
    WaitTimeout,
)
from .exporters import export_fixations_csv, export_raw_csv
from .filters import IdtConfig
from .recordings import load_recording
from .simulator import Scenario, SimulatorConfig, start_simulator

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NETWORK = 3
EXIT_NOT_FOUND = 4
EXIT_IO = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glasskit")
    parser.add_argument("--config", help="JSON config file with port overrides")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="find a device on the network")
    p.add_argument("--timeout", type=int, default=5000, metavar="MS")
    p.add_argument(
        "--interface",
        action="append",
        dest="interfaces",
        metavar="ADDR",
        help="destination address to probe (repeatable; default: all broadcast addresses)",
    )
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("record", help="calibrate and record a session")
    p.add_argument("--project", required=True)
    p.add_argument("--participant", required=True)
    p.add_argument("--address", help="device host, 'host' or 'host%%scope'; discovered if omitted")
    p.add_argument("--discover-timeout", type=int, default=5000, metavar="MS")
    p.add_argument("--duration-ms", type=int, help="record for a fixed time instead of keys")
    p.add_argument(
        "--interactive",
        action="store_true",
        help="read keys from stdin: 's' stops the recording, 'g' prints the latest data",
    )
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("export", help="export a stored recording to CSV")
    p.add_argument("--project-dir", required=True)
    p.add_argument("--project", required=True, dest="project_id")
    p.add_argument("--recording", required=True, dest="recording_id")
    p.add_argument("--raw", action="store_true", help="write raw sample rows")
    p.add_argument("--fixations", action="store_true", help="write I-DT fixation rows")
    p.add_argument("--dispersion", type=float, default=5.0, help="dispersion threshold, percent of scene")
    p.add_argument("--duration", type=float, default=100.0, help="duration threshold, ms")
    p.add_argument("--raw-output", default="rawdata.csv")
    p.add_argument("--fixations-output", default="fdata.csv")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("simulate", help="run the device simulator until interrupted")
    p.add_argument("--sd-root", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--api-port", type=int, default=None)
    p.add_argument("--stream-port", type=int, default=None)
    p.add_argument("--discovery-port", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", help="scenario JSON file to auto-play while clients are live")
    p.add_argument(
        "--calibration-outcome",
        choices=["success", "fail", "never"],
        default="success",
    )
    p.set_defaults(func=cmd_simulate)
    return parser


def _session_for(args, parser) -> Session:
    ports = load_ports(args.config)
    if args.address:
        try:
            address = DeviceAddress.parse(args.address, ports=ports)
        except InvalidAddress as exc:
            parser.error(str(exc))
    else:
        address = discover(args.discover_timeout, ports=ports)
    return connect(address)


def cmd_discover(args, parser) -> int:
    if args.timeout <= 0:
        parser.error("--timeout must be positive")
    ports = load_ports(args.config)
    address = discover(args.timeout, interfaces=args.interfaces, ports=ports)
    scope = f"%{address.scope}" if address.scope else ""
    print(f"{address.host}{scope} api={address.api_port} stream={address.stream_port}")
    return EXIT_OK


def cmd_record(args, parser) -> int:
    if not args.project or not args.participant:
        parser.error("--project and --participant must be non-empty")
    if args.duration_ms is None and not args.interactive:
        parser.error("choose --duration-ms or --interactive")
    if args.duration_ms is not None and args.duration_ms <= 0:
        parser.error("--duration-ms must be positive")

    session = _session_for(args, parser)
    with session:
        project_id = session.create_project(args.project)
        participant_id = session.create_participant(project_id, args.participant)
        calibration_id = session.create_calibration(project_id, participant_id)
        session.start_calibration(calibration_id)
        if not session.wait_until_calibration_is_done(calibration_id):
            print("Calibration failed!")
            return EXIT_FAILURE

        recording_id = session.create_recording(participant_id)
        session.start_streaming()
        session.start_recording(recording_id)
        session.send_logged_event("recording_start")
        session.send_custom_event("recording_event", "start")

        if args.interactive:
            print("Press 's' to stop the recording, 'g' to get data")
            while True:
                c = sys.stdin.read(1)
                if c == "" or c == "s":
                    break
                if c == "g":
                    print(session.get_data().gaze2d)
        else:
            time.sleep(args.duration_ms / 1000.0)

        session.send_logged_event("recording_stop")
        session.send_custom_event("recording_event", "stop")
        session.stop_recording(recording_id)
        session.stop_streaming()
        print(recording_id)
    return EXIT_OK


def cmd_export(args, parser) -> int:
    if not args.raw and not args.fixations:
        parser.error("nothing to export: pass --raw and/or --fixations")
    if args.dispersion <= 0 or args.duration <= 0:
        parser.error("--dispersion and --duration must be positive")
    _, store = load_recording(args.project_dir, args.project_id, args.recording_id)
    if args.raw:
        rows = export_raw_csv(store, args.raw_output)
        print(f"{args.raw_output}: {rows} rows")
    if args.fixations:
        cfg = IdtConfig(dispersion_threshold=args.dispersion, duration_threshold=args.duration)
        rows = export_fixations_csv(store, cfg, args.fixations_output)
        print(f"{args.fixations_output}: {rows} fixations")
    return EXIT_OK


def cmd_simulate(args, parser) -> int:
    stop = False

    def _handle(signum, frame):
        nonlocal stop
        stop = True

    signal.signal(signal.SIGTERM, _handle)
    ports = load_ports(args.config)
    scenario = Scenario.load(args.scenario) if args.scenario else None
    config = SimulatorConfig(
        sd_root=args.sd_root,
        host=args.host,
        api_port=ports.api if args.api_port is None else args.api_port,
        stream_port=ports.stream if args.stream_port is None else args.stream_port,
        discovery_port=ports.discovery if args.discovery_port is None else args.discovery_port,
        seed=args.seed,
        calibration_outcome=args.calibration_outcome,
        auto_scenario=scenario,
    )
    sim = start_simulator(config)
    print(
        f"listening: api={sim.api_port} stream={sim.stream_port} "
        f"discovery={sim.discovery_port} sd_root={args.sd_root}",
        flush=True,
    )
    try:
        while not stop:
            time.sleep(0.1)
    except KeyboardInterrupt:
        pass
    finally:
        sim.stop()
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (DiscoveryTimeout, ConnectFailed, WaitTimeout, ApiError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except NotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except GlassKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
