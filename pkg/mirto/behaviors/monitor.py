"""Sensor monitor loop: periodic IR printouts and bump edge events."""
import logging
from dataclasses import dataclass, field

from mirto.behaviors.common import CONTROL_TICK, IR_SENSORS, Robot, read_ir
from mirto.behaviors.trace import TraceRecord, snapshot
from mirto.errors import UsageError

logger = logging.getLogger(__name__)

PRINT_INTERVAL_MS = 3000


@dataclass(frozen=True)
class MonitorEvent:
    t_ms: int
    kind: str  # "ir", "pressed", "released" or "exit"
    side: str | None = None
    values: tuple[int, ...] = ()

    def describe(self) -> str:
        match self.kind:
            case "ir":
                return "; ".join(f"IR sensor {i} -> {v}" for i, v in zip(IR_SENSORS, self.values))
            case "pressed" | "released":
                return f"{self.side.capitalize()} bump {self.kind}"
            case _:
                return "Both bumps pressed, bye"


@dataclass
class MonitorResult:
    events: list[MonitorEvent] = field(default_factory=list)
    trace: list[TraceRecord] = field(default_factory=list)

    def of_kind(self, kind: str) -> list[MonitorEvent]:
        return [e for e in self.events if e.kind == kind]


def run_monitor(
    robot: Robot,
    print_interval_ms: int = PRINT_INTERVAL_MS,
    duration_s: float | None = None,
    tick_seconds: float = CONTROL_TICK,
) -> MonitorResult:
    """Watch the sensors until both bumpers are pressed at once (or `duration_s` passes)."""
    if print_interval_ms <= 0:
        raise UsageError(f"print interval must be positive, got {print_interval_ms}")
    result = MonitorResult()

    def emit(event: MonitorEvent) -> None:
        result.events.append(event)
        logger.info("%s", event.describe())

    start = previous = robot.now_ms()
    was_left = was_right = False
    while True:
        now = robot.now_ms()
        if now - previous >= print_interval_ms:
            emit(MonitorEvent(now, "ir", values=read_ir(robot)))
            previous = now

        left, right = robot.left_bump(), robot.right_bump()
        if left != was_left:
            emit(MonitorEvent(now, "pressed" if left else "released", "left"))
        if right != was_right:
            emit(MonitorEvent(now, "pressed" if right else "released", "right"))
        was_left, was_right = left, right
        result.trace.append(snapshot(robot, (0, 0)))

        if left and right:
            emit(MonitorEvent(now, "exit"))
            break
        if duration_s is not None and now - start >= duration_s * 1000:
            break
        robot.sleep(tick_seconds)
    return result


def log_ir_samples(
    robot: Robot,
    interval_ms: int = PRINT_INTERVAL_MS,
    duration_s: float = 9.0,
    tick_seconds: float = CONTROL_TICK,
) -> list[int]:
    """All three IR readings every `interval_ms`, oldest sample first."""
    if interval_ms <= 0:
        raise UsageError(f"interval must be positive, got {interval_ms}")
    if duration_s < 0:
        raise UsageError(f"duration cannot be negative, got {duration_s}")
    samples: list[int] = []
    start = previous = robot.now_ms()
    while True:
        now = robot.now_ms()
        if now - previous >= interval_ms:
            samples.extend(read_ir(robot))
            previous = now
        if now - start >= duration_s * 1000:
            return samples
        robot.sleep(tick_seconds)
