from typing import Optional, Type


class TestbedError(Exception):
    """Base class for every error raised by the testbed"""

    code = "TESTBED_ERROR"
    __test__ = False

    def __init__(self, message: str, title: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.title = title


class ValidationError(TestbedError):
    """Scenario / configuration / type invariant violation"""

    code = "VALIDATION_ERROR"

    def __init__(self, message: str, key_path: Optional[str] = None, title: Optional[str] = None):
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message, title=title)
        self.key_path = key_path


class FrameEncodeError(ValidationError):
    code = "FRAME_ENCODE_ERROR"

    def __init__(self, message: str, field: str):
        super().__init__(message, key_path=field, title="Frame Encode Error")
        self.field = field


class FrameDecodeError(TestbedError):
    code = "FRAME_DECODE_ERROR"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})", title="Frame Decode Error")
        self.offset = offset


class BusError(TestbedError):
    code = "BUS_ERROR"


class DeviceFault(TestbedError):
    """A device handler raised while the event loop was running"""

    code = "DEVICE_FAULT"

    def __init__(self, message: str, device_id: str):
        super().__init__(f"[{device_id}] {message}", title="Device Fault")
        self.device_id = device_id


class IncompleteChainError(TestbedError):
    code = "INCOMPLETE_CHAIN"

    def __init__(self, missing: str):
        super().__init__(f"Event log has no '{missing}' event in the trip chain", title="Incomplete Chain")
        self.missing = missing


def throw(message: str, exc: Type[TestbedError] = ValidationError, **kwargs):
    """
    Raise `exc` with the message, e.g. throw("must be > 0", key_path="devices.pc.pickupRmsA")
    """
    raise exc(message, **kwargs)
