import logging
import os
from dataclasses import dataclass

from dotenv import load_dotenv

from mirto.errors import UsageError

load_dotenv()

DEFAULT_BAUDRATE = 57600
DEFAULT_READ_TIMEOUT_MS = 1000
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass(frozen=True)
class SerialSettings:
    baudrate: int = DEFAULT_BAUDRATE
    bytesize: int = 8
    parity: str = "N"
    stopbits: int = 1
    xonxoff: bool = False
    rtscts: bool = False


def get_endpoint(override: str | None = None) -> str | None:
    return override or os.getenv("MIRTO_ENDPOINT") or None


def get_serial_settings() -> SerialSettings:
    return SerialSettings(baudrate=_positive_int("MIRTO_BAUDRATE", DEFAULT_BAUDRATE))


def get_read_timeout_ms() -> int:
    return _positive_int("MIRTO_READ_TIMEOUT_MS", DEFAULT_READ_TIMEOUT_MS)


def configure_logging(level: str | None = None) -> None:
    level = (level or os.getenv("MIRTO_LOG_LEVEL") or "INFO").upper()
    if not isinstance(logging.getLevelName(level), int):
        raise UsageError(f"unknown log level {level!r}")
    logging.basicConfig(level=level, format=LOG_FORMAT)


def _positive_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {raw!r}") from None
    if value <= 0:
        raise UsageError(f"{name} must be positive, got {value}")
    return value
