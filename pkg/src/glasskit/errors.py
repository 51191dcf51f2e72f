"""Exception types shared across the toolkit.

Device API failures carry a machine-readable ``code`` so the same error
vocabulary works in-process (simulator engine) and over the wire (HTTP
body ``{"error": <code>}``).
"""

from __future__ import annotations


class GlassKitError(Exception):
    """Base class for all toolkit errors."""


class MalformedText(GlassKitError):
    """A stream line or datagram is not a parseable JSON object."""


class InvalidRange(GlassKitError):
    """A range query was given bounds with t0 > t1."""


class ConfigInvalid(GlassKitError):
    """A filter or tool configuration value is out of its legal range."""


class DiscoveryTimeout(GlassKitError):
    """No device answered discovery within the allotted time."""


class InvalidAddress(GlassKitError):
    """Host text does not parse as an IPv4/IPv6 address, or a link-local
    IPv6 host is missing its interface scope."""


class ConnectFailed(GlassKitError):
    """The device did not answer on its API port."""


class SessionStateError(GlassKitError):
    """An operation was called in a session state that does not allow it."""


class WaitTimeout(GlassKitError):
    """Polling did not reach a terminal state within the allotted time."""


class ApiError(GlassKitError):
    """The device rejected a request.

    Attributes:
        status: HTTP-style status code.
        body: decoded response body (dict when the device sent JSON).
        code: short error code from the body, empty when absent.
    """

    def __init__(self, status: int, body=None, code: str = ""):
        self.status = status
        self.body = body
        self.code = code or (body.get("error", "") if isinstance(body, dict) else "")
        super().__init__(f"device returned {status}: {self.code or body}")


class UnknownParentId(ApiError):
    """A create call referenced a project/participant id the device does
    not know."""


class NotCalibrated(ApiError):
    """Recording start was attempted without a successful calibration for
    the participant."""


class NotFound(GlassKitError):
    """A project or recording id does not exist under the given root."""


class ScenarioInvalid(GlassKitError):
    """A scenario violates its structural constraints."""


class PortInUse(GlassKitError):
    """A simulator port is already bound."""


class SimulatorStateError(GlassKitError):
    """A simulator operation was called in a state that does not allow it."""


class NoSync(GlassKitError):
    """Gaze-to-frame mapping needs at least one sync packet."""


class NoGaze(GlassKitError):
    """Gaze-to-frame mapping needs at least one valid gaze sample."""


# Wire codes for errors that cross the device API. The simulator raises the
# typed exception; the HTTP layer sends the code; the client raises the same
# type back from the code.
ERROR_CODES = {
    "unknown_parent": UnknownParentId,
    "not_calibrated": NotCalibrated,
}


def api_error_from_code(status: int, body) -> ApiError:
    """Build the most specific ApiError subclass for a response body."""
    code = body.get("error", "") if isinstance(body, dict) else ""
    cls = ERROR_CODES.get(code, ApiError)
    return cls(status, body, code)
