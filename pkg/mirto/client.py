"""ASIP client: background event ingestion into a pin cache plus the robot accessor API."""
import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable

from mirto.contracts import guard, power_in_range
from mirto.errors import ConnectionClosed, FramingError, ParseError, TransportError, UsageError
from mirto.protocol import (
    INTERVAL_RANGE,
    AnalogAutoreport,
    AnalogReport,
    AsipMessage,
    BumpAutoreport,
    BumpReport,
    DebugEvent,
    DigitalReport,
    DigitalWrite,
    EncoderAutoreport,
    EncoderReport,
    IRAutoreport,
    IRReport,
    RawMessage,
    ResetEncoder,
    SetMotors,
    SetPinMode,
    decode,
    encode,
)
from mirto.sim.clock import Clock, WallClock
from mirto.transport import Connection, TransportEndpoint, open_connection

logger = logging.getLogger(__name__)

MAX_NUM_ANALOG_PINS = 16
NUM_DIGITAL_PINS = 16
NUM_IR_SENSORS = 3
HIGH = 1
LOW = 0

TICK_PREFIX = "tick:"
TICK_WAIT_SECONDS = 30.0


# ---------------------------------------------------------------------------
# Pin cache
# ---------------------------------------------------------------------------
@dataclass
class PinCache:
    analog: list[int] = field(default_factory=lambda: [0] * MAX_NUM_ANALOG_PINS)
    digital: list[int] = field(default_factory=lambda: [0] * NUM_DIGITAL_PINS)
    ir: list[int] = field(default_factory=lambda: [0] * NUM_IR_SENSORS)
    bump_left: bool = False
    bump_right: bool = False
    encoder: list[int] = field(default_factory=lambda: [0, 0])


def _clamp(service: str, index: int, value: int, low: int, high: int) -> int:
    if low <= value <= high:
        return value
    clamped = min(max(value, low), high)
    logger.warning("%s[%d]=%d outside [%d, %d], clamped to %d", service, index, value, low, high, clamped)
    return clamped


def _apply_slots(slots: list[int], msg, service: str) -> bool:
    """Write every pair of a report into `slots`, or nothing if any index is out of range."""
    bad = [i for i, _ in msg.values if i >= len(slots)]
    if bad:
        logger.warning("dropping %s report with index %s >= %d", service, bad, len(slots))
        return False
    low, high = msg.VALUE_RANGE
    for index, value in msg.values:
        slots[index] = _clamp(service, index, value, low, high)
    return True


def process_analog_values(cache: PinCache, msg: AnalogReport) -> bool:
    return _apply_slots(cache.analog, msg, "analog")


def apply_event(cache: PinCache, msg: AsipMessage) -> bool:
    """Fold one device event into the cache; returns False when nothing changed slot-wise."""
    match msg:
        case AnalogReport():
            return process_analog_values(cache, msg)
        case DigitalReport():
            return _apply_slots(cache.digital, msg, "digital")
        case IRReport():
            return _apply_slots(cache.ir, msg, "ir")
        case EncoderReport():
            return _apply_slots(cache.encoder, msg, "encoder")
        case BumpReport():
            flags = [int(cache.bump_left), int(cache.bump_right)]
            if not _apply_slots(flags, msg, "bump"):
                return False
            cache.bump_left, cache.bump_right = bool(flags[0]), bool(flags[1])
            return True
    return False


def _check_index(name: str, value: int, count: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < count:
        raise UsageError(f"{name} must be in 0..{count - 1}, got {value!r}")


def _check_interval(ms: int) -> None:
    low, high = INTERVAL_RANGE
    if not isinstance(ms, int) or not low <= ms <= high:
        raise UsageError(f"autoreport interval must be in {low}..{high} ms, got {ms!r}")


# ---------------------------------------------------------------------------
# Session
# ---------------------------------------------------------------------------
class ClientSession:
    def __init__(
        self,
        connection: Connection,
        clock: Clock | None = None,
        settle_ms: int = 500,
        pose_probe: Callable[[], tuple[float, float, float]] | None = None,
    ):
        self.connection = connection
        self.clock = clock or WallClock()
        self.settle_ms = settle_ms
        self.pose_probe = pose_probe
        self.cache = PinCache()
        self.last_event_at: float | None = None

        self._lock = threading.Lock()
        self._ticks = threading.Condition()
        self._tick = 0
        self._error: BaseException | None = None
        self._running = True
        self._reader = threading.Thread(target=self._ingest, name="asip-ingest", daemon=True)
        self._reader.start()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    # -- ingestion ----------------------------------------------------------
    def _ingest(self) -> None:
        while self._running:
            try:
                line = self.connection.recv_line(timeout_ms=100)
            except FramingError as e:
                logger.warning("%s", e)
                continue
            except TransportError as e:
                if self._running:
                    logger.error("ingestion stopped: %s", e)
                    self._error = e
                break
            if line is not None:
                self.handle_line(line)
        with self._ticks:
            self._ticks.notify_all()

    def handle_line(self, line: str) -> None:
        logger.debug("<- %s", line)
        try:
            msg = decode(line)
        except ParseError as e:
            logger.warning("ignoring malformed device line %r: %s", line, e)
            return
        match msg:
            case DebugEvent(text=text) if text.startswith(TICK_PREFIX):
                self._record_tick(text[len(TICK_PREFIX) :])
            case DebugEvent(text=text):
                logger.info("device: %s", text)
            case RawMessage():
                logger.debug("unknown device line %r", line)
            case _:
                with self._lock:
                    if apply_event(self.cache, msg):
                        self.last_event_at = self.clock.now()

    def _record_tick(self, text: str) -> None:
        with self._ticks:
            try:
                self._tick = int(text)
            except ValueError:
                logger.error("malformed tick marker %r", text)
                self._error = ParseError(1 + len(TICK_PREFIX), f"tick marker {text!r} is not a step number")
            self._ticks.notify_all()

    def _wait_for_tick(self, target: int) -> None:
        with self._ticks:
            reached = self._ticks.wait_for(
                lambda: self._tick >= target or self._error is not None or not self._running,
                timeout=TICK_WAIT_SECONDS,
            )
        if isinstance(self._error, ParseError):
            raise TransportError(f"simulator clock unreadable: {self._error}") from self._error
        if self._error is not None:
            raise ConnectionClosed(f"device connection lost: {self._error}")
        if not reached:
            raise TransportError(f"simulator did not reach step {target}")

    # -- commands -----------------------------------------------------------
    def send(self, msg: AsipMessage) -> None:
        line = encode(msg)
        logger.debug("-> %s", line)
        self.connection.send_line(line)

    def set_pin_mode(self, pin: int, mode: int) -> None:
        _check_index("pin", pin, NUM_DIGITAL_PINS)
        self.send(SetPinMode(pin, mode))

    def digital_write(self, pin: int, level: int) -> None:
        _check_index("pin", pin, NUM_DIGITAL_PINS)
        if level not in (LOW, HIGH):
            raise UsageError(f"level must be 0 or 1, got {level!r}")
        self.send(DigitalWrite(pin, level))

    def digital_write_all(self, pins: Iterable[int], level: int) -> None:
        for pin in pins:
            self.digital_write(pin, level)

    @guard(
        "set_motors",
        pre=lambda session, left, right: power_in_range(left) and power_in_range(right),
        describe=lambda session, left, right: f"({left!r},{right!r})",
    )
    def set_motors(self, left: int, right: int) -> None:
        self.send(SetMotors(int(left), int(right)))

    def stop_motors(self) -> None:
        self.set_motors(0, 0)

    def reset_count(self, wheel: int) -> None:
        _check_index("wheel", wheel, 2)
        self.send(ResetEncoder(wheel))
        with self._lock:
            self.cache.encoder[wheel] = 0

    def enable_ir(self, ms: int) -> None:
        _check_interval(ms)
        self.send(IRAutoreport(ms))

    def enable_bumpers(self, ms: int) -> None:
        _check_interval(ms)
        self.send(BumpAutoreport(ms))

    def enable_encoders(self, ms: int) -> None:
        _check_interval(ms)
        self.send(EncoderAutoreport(ms))

    def enable_analog(self, ms: int) -> None:
        _check_interval(ms)
        self.send(AnalogAutoreport(ms))

    # -- cache reads --------------------------------------------------------
    def get_ir(self, index: int) -> int:
        _check_index("IR sensor", index, NUM_IR_SENSORS)
        with self._lock:
            return self.cache.ir[index]

    def get_count(self, wheel: int) -> int:
        _check_index("wheel", wheel, 2)
        with self._lock:
            return self.cache.encoder[wheel]

    def left_bump(self) -> bool:
        with self._lock:
            return self.cache.bump_left

    def right_bump(self) -> bool:
        with self._lock:
            return self.cache.bump_right

    def analog_read(self, pin: int) -> int:
        _check_index("pin", pin, MAX_NUM_ANALOG_PINS)
        with self._lock:
            return self.cache.analog[pin]

    def digital_read(self, pin: int) -> int:
        _check_index("pin", pin, NUM_DIGITAL_PINS)
        with self._lock:
            return self.cache.digital[pin]

    def pose(self) -> tuple[float, float, float] | None:
        return self.pose_probe() if self.pose_probe else None

    # -- time ---------------------------------------------------------------
    def now_ms(self) -> int:
        return round(self.clock.now() * 1000)

    def sleep(self, seconds: float) -> None:
        if seconds < 0:
            raise UsageError(f"cannot sleep a negative time: {seconds}")
        target = self.clock.sleep(seconds)
        if target is not None:
            self._wait_for_tick(target)

    def warm_up(self, ir_ms: int = 100, bump_ms: int = 100, encoder_ms: int = 100) -> None:
        """Enable the sensor streams with short pauses, then let readings settle."""
        self.sleep(0.2)
        self.enable_ir(ir_ms)
        self.sleep(0.2)
        self.enable_bumpers(bump_ms)
        self.enable_encoders(encoder_ms)
        self.sleep(self.settle_ms / 1000)

    def close(self) -> None:
        if not self._running and self.connection.closed:
            return
        self._running = False
        if self._reader is not threading.current_thread():
            self._reader.join(timeout=1.0)
        self.connection.close()


def open_session(
    endpoint: TransportEndpoint | str | Connection,
    clock: Clock | None = None,
    settle_ms: int = 500,
) -> ClientSession:
    if isinstance(endpoint, str):
        endpoint = TransportEndpoint.parse(endpoint)
    connection = endpoint if isinstance(endpoint, Connection) else open_connection(endpoint)
    return ClientSession(connection, clock=clock, settle_ms=settle_ms)
