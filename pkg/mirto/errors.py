class MirtoError(Exception):
    """Base class for every error raised by this package."""


class UsageError(MirtoError, ValueError):
    """The caller passed an argument outside what the operation accepts."""


# ---------------------------------------------------------------------------
# Protocol
# ---------------------------------------------------------------------------
class ProtocolError(MirtoError):
    pass


class EncodeError(ProtocolError):
    def __init__(self, field: str, value: object, reason: str = "out of range"):
        self.field = field
        self.value = value
        super().__init__(f"cannot encode {field}={value!r}: {reason}")


class ParseError(ProtocolError):
    def __init__(self, offset: int, reason: str):
        self.offset = offset
        self.reason = reason
        super().__init__(f"parse error at offset {offset}: {reason}")


# ---------------------------------------------------------------------------
# Transport
# ---------------------------------------------------------------------------
class TransportError(MirtoError, OSError):
    pass


class OpenError(TransportError):
    pass


class ConnectionClosed(TransportError):
    pass


class FramingError(TransportError):
    pass
