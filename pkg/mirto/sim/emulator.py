"""ASIP device emulator: speaks the device side of the protocol over any connection.

Each step ingests pending commands, advances the physics by one `dt` and emits the
reports that are due in virtual time. In lock-step mode the emulator thread only steps
when the session's SimClock grants steps, and answers every grant with "!tick:<step>".
"""
import logging
import queue
import threading
import time
from dataclasses import replace

from mirto.errors import ConnectionClosed, FramingError, ParseError, UsageError
from mirto.protocol import (
    INPUT,
    INPUT_PULLUP,
    OUTPUT,
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
from mirto.sim.clock import SimClock
from mirto.sim.physics import MAX_POWER, RobotState, SimConfig, sample_ir, step_sim
from mirto.sim.world import WorldModel
from mirto.transport import MAX_LINE_BYTES, Connection, TransportEndpoint, listen, open_serial

logger = logging.getLogger(__name__)

SERVICES = ("analog", "ir", "bump", "encoder")


class Emulator:
    def __init__(
        self,
        connection: Connection,
        world: WorldModel,
        config: SimConfig | None = None,
        state: RobotState | None = None,
    ):
        self.connection = connection
        self.world = world
        self.config = config or SimConfig()
        self.state = state or RobotState.at(world.start)
        self.step_index = 0
        self.clock = SimClock(self.config.dt, driver=self.grant)
        self.intervals_ms = dict.fromkeys(SERVICES, 0)
        self._next_due_ms = dict.fromkeys(SERVICES, 0)
        self.pin_modes = [0] * 16
        self.digital_levels = [0] * 16
        self.analog_levels = list(self.config.analog_levels) + [0] * (16 - len(self.config.analog_levels))
        self._grants: queue.Queue[int | None] = queue.Queue()
        self._thread: threading.Thread | None = None
        self.failure: BaseException | None = None

    # -- lock-step driving --------------------------------------------------
    def start(self) -> "Emulator":
        self._thread = threading.Thread(target=self._run_lockstep, name="asip-emulator", daemon=True)
        self._thread.start()
        return self

    def grant(self, steps: int) -> None:
        self._grants.put(steps)

    def stop(self) -> None:
        if self._thread is not None:
            self._grants.put(None)
            self._thread.join(timeout=5.0)
            self._thread = None

    def _run_lockstep(self) -> None:
        while True:
            steps = self._grants.get()
            if steps is None:
                return
            try:
                self.advance(steps)
                self._emit(DebugEvent(f"tick:{self.step_index}"))
            except ConnectionClosed as e:
                logger.info("client went away: %s", e)
                return
            except Exception as e:
                logger.exception("emulator failed at step %d", self.step_index)
                self.failure = e
                return

    def advance(self, steps: int) -> None:
        for _ in range(steps):
            self.tick()

    def pose(self) -> tuple[float, float, float]:
        return self.state.pose

    def now_ms(self) -> int:
        return round(self.step_index * self.config.dt * 1000)

    # -- one step -----------------------------------------------------------
    def tick(self) -> None:
        self._drain_commands()
        bumps_before = (self.state.bump_left, self.state.bump_right)
        self.state = step_sim(self.state, self.world, self.config, self.config.dt)
        self.step_index += 1
        bump_changed = (self.state.bump_left, self.state.bump_right) != bumps_before
        self._emit_due_reports(bump_changed)

    def _drain_commands(self) -> None:
        while True:
            try:
                line = self.connection.recv_line(timeout_ms=0)
            except FramingError as e:
                logger.warning("dropping oversized command: %s", e)
                self._emit(DebugEvent(f"parse-error:{MAX_LINE_BYTES}"))
                continue
            if line is None:
                return
            self.handle_line(line)

    def handle_line(self, line: str) -> None:
        logger.debug("device <- %s", line)
        try:
            msg = decode(line)
        except ParseError as e:
            logger.warning("rejecting %r: %s", line, e)
            self._emit(DebugEvent(f"parse-error:{e.offset}"))
            return
        self.apply(msg)

    def apply(self, msg: AsipMessage) -> None:
        match msg:
            case SetMotors(left=left, right=right):
                self.state = replace(self.state, power_left=_clamp_power(left), power_right=_clamp_power(right))
            case ResetEncoder(wheel=0):
                self.state = replace(self.state, encoder_left=0, travel_left=0.0)
            case ResetEncoder(wheel=1):
                self.state = replace(self.state, encoder_right=0, travel_right=0.0)
            case AnalogAutoreport(interval_ms=ms):
                self._enable("analog", ms)
            case IRAutoreport(interval_ms=ms):
                self._enable("ir", ms)
            case BumpAutoreport(interval_ms=ms):
                self._enable("bump", ms)
            case EncoderAutoreport(interval_ms=ms):
                self._enable("encoder", ms)
            case SetPinMode(pin=pin, mode=mode) if 0 <= pin < 16 and mode in (INPUT, INPUT_PULLUP, OUTPUT):
                self.pin_modes[pin] = mode
                if mode != OUTPUT:
                    self.digital_levels[pin] = 1 if mode == INPUT_PULLUP else 0
                    self._emit(DigitalReport(((pin, self.digital_levels[pin]),)))
            case DigitalWrite(pin=pin, value=value) if 0 <= pin < 16 and value in (0, 1):
                if self.pin_modes[pin] in (INPUT, INPUT_PULLUP):
                    logger.warning("digital write to input pin %d ignored", pin)
                else:
                    self.digital_levels[pin] = value
            case RawMessage(line=line):
                logger.info("ignoring unknown command %r", line)
            case _:
                logger.warning("ignoring unsupported or out-of-range message %r", msg)

    def _enable(self, service: str, ms: int) -> None:
        ms = max(0, ms)
        self.intervals_ms[service] = ms
        self._next_due_ms[service] = self.now_ms() + ms

    def _emit_due_reports(self, bump_changed: bool) -> None:
        now = self.now_ms()
        due = {}
        for service in SERVICES:
            interval = self.intervals_ms[service]
            if interval and now >= self._next_due_ms[service]:
                due[service] = True
                self._next_due_ms[service] += interval
                if self._next_due_ms[service] <= now:
                    self._next_due_ms[service] = now + interval
        if bump_changed and self.intervals_ms["bump"]:
            due["bump"] = True

        state = self.state
        if "analog" in due:
            self._emit(AnalogReport(tuple(enumerate(self.analog_levels[: len(self.config.analog_levels)]))))
        if "ir" in due:
            values = [sample_ir(state, self.world, self.config, i, self.step_index) for i in range(3)]
            self._emit(IRReport(tuple(enumerate(values))))
        if "bump" in due:
            self._emit(BumpReport(((0, int(state.bump_left)), (1, int(state.bump_right)))))
        if "encoder" in due:
            self._emit(EncoderReport(((0, state.encoder_left), (1, state.encoder_right))))

    def _emit(self, msg: AsipMessage) -> None:
        line = encode(msg)
        logger.debug("device -> %s", line)
        self.connection.send_line(line)

    # -- real-time serving --------------------------------------------------
    def serve_realtime(self) -> None:
        """Step against the wall clock until the client disconnects."""
        dt = self.config.dt
        started = time.monotonic()
        try:
            while True:
                self.tick()
                delay = started + self.step_index * dt - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
        except ConnectionClosed as e:
            logger.info("client disconnected after %d steps: %s", self.step_index, e)


def _clamp_power(power: int) -> int:
    if -MAX_POWER <= power <= MAX_POWER:
        return power
    logger.warning("motor power %d clamped to +/-%d", power, MAX_POWER)
    return max(-MAX_POWER, min(MAX_POWER, power))


def run_emulator(endpoint: TransportEndpoint, world: WorldModel, config: SimConfig | None = None) -> Emulator:
    """Serve one client on a tcp or serial endpoint in real time, returning once it leaves."""
    if endpoint.kind == "tcp":
        with listen(endpoint) as listener:
            connection = listener.accept()
    elif endpoint.kind == "serial":
        connection = open_serial(endpoint.address, read_timeout_ms=endpoint.read_timeout_ms)
    else:
        raise UsageError("loopback emulators are driven in lock-step; build an Emulator directly")
    emulator = Emulator(connection, world, config)
    with connection:
        emulator.serve_realtime()
    return emulator
