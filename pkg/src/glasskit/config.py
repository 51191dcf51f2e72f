"""Port and timing configuration.

Defaults can be overridden by a JSON config file and, on top of that, by
the GLASSKIT_API_PORT / GLASSKIT_STREAM_PORT / GLASSKIT_DISCOVERY_PORT /
GLASSKIT_VIDEO_PORT environment variables.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

DEFAULT_API_PORT = 13080
DEFAULT_STREAM_PORT = 13081
DEFAULT_VIDEO_PORT = 13082
DEFAULT_DISCOVERY_PORT = 13006

# Streaming contract timing.
KEEPALIVE_INTERVAL_S = 1.0
KEEPALIVE_CUTOFF_S = 3.0
DISCOVERY_PERIOD_S = 1.0
CALIBRATION_POLL_S = 0.1

# Samples older than the channel high-water mark minus this window are
# treated as expired on ingest.
DEFAULT_REORDER_WINDOW_US = 500_000

_ENV_VARS = {
    "api": "GLASSKIT_API_PORT",
    "stream": "GLASSKIT_STREAM_PORT",
    "video": "GLASSKIT_VIDEO_PORT",
    "discovery": "GLASSKIT_DISCOVERY_PORT",
}


@dataclass(frozen=True)
class PortConfig:
    api: int = DEFAULT_API_PORT
    stream: int = DEFAULT_STREAM_PORT
    video: int = DEFAULT_VIDEO_PORT
    discovery: int = DEFAULT_DISCOVERY_PORT


def load_ports(config_path: str | os.PathLike | None = None, env=None) -> PortConfig:
    """Resolve the port configuration.

    Precedence: built-in defaults < JSON config file keys
    (api_port/stream_port/video_port/discovery_port) < environment variables.
    """
    env = os.environ if env is None else env
    ports = PortConfig()
    if config_path is not None:
        with open(config_path, encoding="utf-8") as fh:
            raw = json.load(fh)
        overrides = {
            name: int(raw[f"{name}_port"])
            for name in ("api", "stream", "video", "discovery")
            if f"{name}_port" in raw
        }
        ports = replace(ports, **overrides)
    env_overrides = {
        name: int(env[var]) for name, var in _ENV_VARS.items() if env.get(var)
    }
    return replace(ports, **env_overrides)
