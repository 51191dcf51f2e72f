"""glasskit: control and process recordings of networked wearable
eye-trackers, with a protocol-faithful device simulator for testing."""

from .config import PortConfig, load_ports
from .controller import DeviceAddress, Session, connect, discover
from .errors import (
    ApiError,
    ConfigInvalid,
    ConnectFailed,
    DiscoveryTimeout,
    GlassKitError,
    InvalidAddress,
    InvalidRange,
    MalformedText,
    NoGaze,
    NoSync,
    NotCalibrated,
    NotFound,
    PortInUse,
    ScenarioInvalid,
    SessionStateError,
    SimulatorStateError,
    UnknownParentId,
    WaitTimeout,
)
from .exporters import export_fixations_csv, export_raw_csv
from .filters import Fixation, IdtConfig, idt_fixations
from .gazedata import CHANNELS, GazeDataStore, GazeSnapshot, channel_of
from .livedata import (
    CustomApiEvent,
    EyeSample,
    GazePosition2D,
    GazePosition3D,
    ImuSample,
    LiveDataPacket,
    LoggedEvent,
    SyncPacket,
    UnknownPacket,
    parse_livedata_file,
    parse_packet,
    serialize_packet,
    write_livedata_file,
)
from .mapping import map_gaze_to_frame
from .recordings import ProjectInfo, RecordingRef, find_recording, load_recording, scan_projects
from .simulator import (
    GlassesSimulator,
    Scenario,
    ScenarioSegment,
    ScheduledEvent,
    SimulatorConfig,
    generate_scenario_packets,
    start_simulator,
)

__version__ = "0.1.0"

__all__ = [
    "ApiError",
    "CHANNELS",
    "ConfigInvalid",
    "ConnectFailed",
    "CustomApiEvent",
    "DeviceAddress",
    "DiscoveryTimeout",
    "EyeSample",
    "Fixation",
    "GazeDataStore",
    "GazePosition2D",
    "GazePosition3D",
    "GazeSnapshot",
    "GlassKitError",
    "GlassesSimulator",
    "IdtConfig",
    "ImuSample",
    "InvalidAddress",
    "InvalidRange",
    "LiveDataPacket",
    "LoggedEvent",
    "MalformedText",
    "NoGaze",
    "NoSync",
    "NotCalibrated",
    "NotFound",
    "PortConfig",
    "PortInUse",
    "ProjectInfo",
    "RecordingRef",
    "Scenario",
    "ScenarioInvalid",
    "ScenarioSegment",
    "ScheduledEvent",
    "Session",
    "SessionStateError",
    "SimulatorConfig",
    "SimulatorStateError",
    "SyncPacket",
    "UnknownPacket",
    "UnknownParentId",
    "WaitTimeout",
    "channel_of",
    "connect",
    "discover",
    "export_fixations_csv",
    "export_raw_csv",
    "find_recording",
    "generate_scenario_packets",
    "idt_fixations",
    "load_ports",
    "load_recording",
    "map_gaze_to_frame",
    "parse_livedata_file",
    "parse_packet",
    "scan_projects",
    "serialize_packet",
    "start_simulator",
    "write_livedata_file",
]
