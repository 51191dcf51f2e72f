"""Client for the glasses: discovery, connection, session lifecycle,
streaming control, live data access, and event injection.

The device speaks three wire protocols, all documented in
``docs/wire-format.md``: UDP discovery datagrams, an HTTP JSON session
API, and UDP live-data datagrams gated by periodic keep-alives.
"""

from __future__ import annotations

import ipaddress
import json
import logging
import select
import socket
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass
from typing import List, Optional

import psutil

from .config import (
    CALIBRATION_POLL_S,
    DEFAULT_API_PORT,
    DEFAULT_REORDER_WINDOW_US,
    DEFAULT_STREAM_PORT,
    DEFAULT_VIDEO_PORT,
    DISCOVERY_PERIOD_S,
    KEEPALIVE_INTERVAL_S,
    PortConfig,
)
from .errors import (
    ConnectFailed,
    DiscoveryTimeout,
    InvalidAddress,
    MalformedText,
    SessionStateError,
    WaitTimeout,
    api_error_from_code,
)
from .gazedata import GazeDataStore, GazeSnapshot
from .livedata import parse_packet

logger = logging.getLogger(__name__)

STATE_DISCONNECTED = "disconnected"
STATE_CONNECTED = "connected"
STATE_STREAMING = "streaming"

KEEPALIVE_MESSAGE = {"type": "live.data", "op": "keepalive"}


@dataclass(frozen=True)
class DeviceAddress:
    """Network identity of a device: host, optional IPv6 interface scope,
    and its three service ports."""

    host: str
    scope: Optional[str] = None
    api_port: int = DEFAULT_API_PORT
    stream_port: int = DEFAULT_STREAM_PORT
    video_port: int = DEFAULT_VIDEO_PORT

    def __post_init__(self):
        try:
            parsed = ipaddress.ip_address(self.host)
        except ValueError as exc:
            raise InvalidAddress(f"not an IP address: {self.host!r}") from exc
        if isinstance(parsed, ipaddress.IPv6Address) and parsed.is_link_local and not self.scope:
            raise InvalidAddress(
                f"link-local IPv6 host {self.host!r} needs an interface scope"
            )

    @classmethod
    def parse(cls, text: str, ports: Optional[PortConfig] = None) -> "DeviceAddress":
        """Build an address from 'host' or 'host%scope' text."""
        host, _, scope = text.partition("%")
        kwargs = {}
        if ports is not None:
            kwargs = {
                "api_port": ports.api,
                "stream_port": ports.stream,
                "video_port": ports.video,
            }
        return cls(host=host, scope=scope or None, **kwargs)

    @property
    def is_ipv6(self) -> bool:
        return ":" in self.host

    def url_host(self) -> str:
        """Host part for URLs; IPv6 is bracketed, scopes %25-encoded."""
        if not self.is_ipv6:
            return self.host
        zone = f"%25{urllib.parse.quote(self.scope)}" if self.scope else ""
        return f"[{self.host}{zone}]"

    def api_base(self) -> str:
        return f"http://{self.url_host()}:{self.api_port}"


def _default_discovery_targets() -> List[str]:
    """Loopback plus every interface's IPv4 broadcast address."""
    targets = ["127.0.0.1"]
    try:
        for addrs in psutil.net_if_addrs().values():
            for a in addrs:
                if a.family == socket.AF_INET and a.broadcast:
                    targets.append(a.broadcast)
    except OSError:
        pass
    if len(targets) == 1:
        targets.append("255.255.255.255")
    seen = set()
    return [t for t in targets if not (t in seen or seen.add(t))]


def discover(
    timeout_ms: int,
    interfaces: Optional[List[str]] = None,
    ports: Optional[PortConfig] = None,
) -> DeviceAddress:
    """Find a device by broadcasting discovery datagrams.

    Probes are sent to every target address (all interface broadcast
    addresses by default, or the given ``interfaces`` list) once per
    discovery period until the first device responds; that responder
    wins. Raises DiscoveryTimeout when nothing answers in time.
    """
    if timeout_ms <= 0:
        raise ValueError("timeout_ms must be positive")
    ports = ports or PortConfig()
    targets = list(interfaces) if interfaces else _default_discovery_targets()
    probe = json.dumps({"type": "discover"}).encode("utf-8")

    socks = {}
    if any(":" not in t for t in targets):
        s4 = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        s4.setsockopt(socket.SOL_SOCKET, socket.SO_BROADCAST, 1)
        s4.bind(("", 0))
        socks[socket.AF_INET] = s4
    if any(":" in t for t in targets):
        s6 = socket.socket(socket.AF_INET6, socket.SOCK_DGRAM)
        s6.bind(("::", 0))
        socks[socket.AF_INET6] = s6

    deadline = time.monotonic() + timeout_ms / 1000.0
    next_probe = 0.0
    try:
        while True:
            now = time.monotonic()
            if now >= deadline:
                raise DiscoveryTimeout(f"no device answered within {timeout_ms} ms")
            if now >= next_probe:
                for target in targets:
                    family = socket.AF_INET6 if ":" in target else socket.AF_INET
                    try:
                        socks[family].sendto(probe, (target, ports.discovery))
                    except OSError as exc:
                        logger.debug("discovery send to %s failed: %s", target, exc)
                next_probe = now + DISCOVERY_PERIOD_S
            wait = min(0.1, deadline - now, max(next_probe - now, 0.0))
            readable, _, _ = select.select(list(socks.values()), [], [], wait)
            for sock in readable:
                raw, addr = sock.recvfrom(2048)
                try:
                    msg = json.loads(raw.decode("utf-8"))
                except (ValueError, UnicodeDecodeError):
                    continue
                if isinstance(msg, dict) and msg.get("type") == "discover-resp":
                    return _address_from_response(msg, addr, ports)
    finally:
        for sock in socks.values():
            sock.close()


def _address_from_response(msg: dict, addr: tuple, ports: PortConfig) -> DeviceAddress:
    host = msg.get("ipv4") or msg.get("ipv6") or addr[0]
    advertised = msg.get("ports") or {}
    return DeviceAddress(
        host=host,
        api_port=int(advertised.get("api", ports.api)),
        stream_port=int(advertised.get("stream", ports.stream)),
        video_port=int(advertised.get("video", ports.video)),
    )


class Session:
    """One client's connection to a device.

    Created through :func:`connect`. While streaming, the session owns a
    background receiver that ingests datagrams into ``store`` and a
    keep-alive emitter that keeps the device sending; both stop with
    :meth:`stop_streaming`.
    """

    def __init__(
        self,
        address: DeviceAddress,
        keepalive_interval_ms: int = int(KEEPALIVE_INTERVAL_S * 1000),
        reorder_window_us: int = DEFAULT_REORDER_WINDOW_US,
        request_timeout_s: float = 5.0,
    ):
        if keepalive_interval_ms <= 0:
            raise ValueError("keepalive_interval_ms must be positive")
        self.address = address
        self.keepalive_interval_ms = keepalive_interval_ms
        self.request_timeout_s = request_timeout_s
        self.store = GazeDataStore(reorder_window_us=reorder_window_us)
        self.state = STATE_DISCONNECTED
        self.device_id: Optional[str] = None
        self.malformed_count = 0
        self._stream_sock: Optional[socket.socket] = None
        self._stop_stream = threading.Event()
        self._stop_keepalive = threading.Event()
        self._threads: List[threading.Thread] = []

    # -- transport ----------------------------------------------------------

    def _api(self, method: str, path: str, body: Optional[dict] = None):
        url = self.address.api_base() + path
        data = json.dumps(body).encode("utf-8") if body is not None else None
        headers = {"Content-Type": "application/json"} if data else {}
        req = urllib.request.Request(url, data=data, headers=headers, method=method)
        try:
            with urllib.request.urlopen(req, timeout=self.request_timeout_s) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            raw = exc.read().decode("utf-8", errors="replace")
            try:
                payload = json.loads(raw)
            except ValueError:
                payload = {"error": "", "detail": raw}
            raise api_error_from_code(exc.code, payload) from exc
        except (urllib.error.URLError, OSError) as exc:
            raise ConnectFailed(f"{url}: {exc}") from exc

    def _require_connected(self) -> None:
        if self.state == STATE_DISCONNECTED:
            raise SessionStateError("session is disconnected")

    # -- catalog lifecycle ------------------------------------------------

    def create_project(self, name: str) -> str:
        self._require_connected()
        return self._api("POST", "/api/projects", {"name": name})["id"]

    def create_participant(self, project_id: str, name: str) -> str:
        self._require_connected()
        return self._api(
            "POST", "/api/participants", {"project_id": project_id, "name": name}
        )["id"]

    def create_calibration(self, project_id: str, participant_id: str) -> str:
        self._require_connected()
        return self._api(
            "POST",
            "/api/calibrations",
            {"project_id": project_id, "participant_id": participant_id},
        )["id"]

    def create_recording(self, participant_id: str) -> str:
        self._require_connected()
        return self._api("POST", "/api/recordings", {"participant_id": participant_id})["id"]

    def start_calibration(self, calibration_id: str) -> None:
        self._require_connected()
        self._api("POST", f"/api/calibrations/{calibration_id}/start", {})

    def wait_until_calibration_is_done(
        self, calibration_id: str, timeout_ms: int = 10_000
    ) -> bool:
        """Poll the calibration until it terminates; True means calibrated,
        False means failed. Raises WaitTimeout when neither happens."""
        self._require_connected()
        deadline = time.monotonic() + timeout_ms / 1000.0
        while True:
            state = self._api("GET", f"/api/calibrations/{calibration_id}")["state"]
            if state == "calibrated":
                return True
            if state == "failed":
                return False
            if time.monotonic() >= deadline:
                raise WaitTimeout(f"calibration {calibration_id} still {state}")
            time.sleep(CALIBRATION_POLL_S)

    def start_recording(self, recording_id: str) -> None:
        self._require_connected()
        self._api("POST", f"/api/recordings/{recording_id}/start", {})

    def stop_recording(self, recording_id: str) -> None:
        self._require_connected()
        self._api("POST", f"/api/recordings/{recording_id}/stop", {})

    def get_projects(self) -> List[dict]:
        self._require_connected()
        return self._api("GET", "/api/projects")

    def get_recordings(self, project_id: str) -> List[dict]:
        self._require_connected()
        return self._api("GET", f"/api/projects/{project_id}/recordings")

    def get_segments(self, recording_id: str) -> List[dict]:
        self._require_connected()
        return self._api("GET", f"/api/recordings/{recording_id}/segments")

    # -- events -------------------------------------------------------------

    def send_logged_event(self, tag: str, payload: Optional[str] = None) -> None:
        """Log a free-text trigger; lands in the active recording with a
        device-assigned timestamp."""
        if not tag:
            raise ValueError("tag must be non-empty")
        self._require_connected()
        self._api("POST", "/api/events", {"kind": "logged", "tag": tag, "payload": payload})

    def send_custom_event(self, event_type: str, tag: str) -> None:
        """Send a structured analysis-tool event (type + tag pair)."""
        if not event_type or not tag:
            raise ValueError("event type and tag must be non-empty")
        self._require_connected()
        self._api("POST", "/api/events", {"kind": "custom", "type": event_type, "tag": tag})

    # -- streaming ----------------------------------------------------------

    def start_streaming(self) -> None:
        """Start the datagram receiver and keep-alive emitter; idempotent."""
        self._require_connected()
        if self.state == STATE_STREAMING:
            return
        family = socket.AF_INET6 if self.address.is_ipv6 else socket.AF_INET
        sock = socket.socket(family, socket.SOCK_DGRAM)
        try:
            sock.bind(("::", 0) if self.address.is_ipv6 else ("", 0))
        except OSError as exc:
            sock.close()
            raise ConnectFailed(f"stream socket: {exc}") from exc
        sock.settimeout(0.2)
        self._stream_sock = sock
        self._stop_stream.clear()
        self._stop_keepalive.clear()
        self._threads = [
            threading.Thread(target=self._keepalive_loop, daemon=True),
            threading.Thread(target=self._receive_loop, daemon=True),
        ]
        for t in self._threads:
            t.start()
        self.state = STATE_STREAMING

    def stop_streaming(self) -> None:
        """Stop receiver and keep-alives; idempotent, no-op if not streaming."""
        if self.state != STATE_STREAMING:
            return
        self._stop_stream.set()
        self._stop_keepalive.set()
        for t in self._threads:
            t.join(timeout=2.0)
        self._threads = []
        if self._stream_sock is not None:
            self._stream_sock.close()
            self._stream_sock = None
        self.state = STATE_CONNECTED

    def _stream_destination(self) -> tuple:
        host = self.address.host
        if self.address.is_ipv6 and self.address.scope:
            host = f"{host}%{self.address.scope}"
        info = socket.getaddrinfo(
            host, self.address.stream_port, self._stream_sock.family, socket.SOCK_DGRAM
        )
        return info[0][4]

    def _keepalive_loop(self) -> None:
        data = json.dumps(KEEPALIVE_MESSAGE).encode("utf-8")
        try:
            dest = self._stream_destination()
        except OSError:
            return
        interval = self.keepalive_interval_ms / 1000.0
        while not self._stop_keepalive.is_set():
            try:
                self._stream_sock.sendto(data, dest)
            except OSError:
                return
            self._stop_keepalive.wait(interval)

    def _receive_loop(self) -> None:
        while not self._stop_stream.is_set():
            try:
                raw, _ = self._stream_sock.recvfrom(65535)
            except socket.timeout:
                continue
            except OSError:
                return
            try:
                self.store.ingest(parse_packet(raw.decode("utf-8", errors="replace")))
            except MalformedText:
                self.malformed_count += 1

    # -- data access ----------------------------------------------------------

    def get_data(self) -> GazeSnapshot:
        """Latest valid sample per channel."""
        return self.store.snapshot()

    def live_scene_url(self) -> str:
        """RTSP URL of the device's scene-camera stream."""
        self._require_connected()
        return f"rtsp://{self.address.url_host()}:{self.address.video_port}/live/scene"

    def close(self) -> None:
        self.stop_streaming()
        self.state = STATE_DISCONNECTED

    def __enter__(self) -> "Session":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def connect(
    address: DeviceAddress,
    keepalive_interval_ms: int = int(KEEPALIVE_INTERVAL_S * 1000),
    reorder_window_us: int = DEFAULT_REORDER_WINDOW_US,
) -> Session:
    """Verify the device answers on its API port and return a connected
    session. Raises ConnectFailed when unreachable."""
    session = Session(
        address,
        keepalive_interval_ms=keepalive_interval_ms,
        reorder_window_us=reorder_window_us,
    )
    session.state = STATE_CONNECTED
    try:
        status = session._api("GET", "/api/system/status")
    except ConnectFailed:
        session.state = STATE_DISCONNECTED
        raise
    session.device_id = status.get("id")
    logger.info("connected to %s at %s", session.device_id, address.host)
    return session
