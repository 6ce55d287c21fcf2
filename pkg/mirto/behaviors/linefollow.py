"""Line following over the three-sensor IR array: a bang-bang table and a PID controller.

Sensors a, b and c are IR 0, 1 and 2 (left, centre, right). A reading above the
threshold means the sensor sees the dark line.
"""
import enum
import logging
import math
from dataclasses import dataclass, field, replace

from mirto.behaviors.common import CONTROL_TICK, Robot, motors_stopped_on_exit, read_ir
from mirto.behaviors.trace import TraceRecord, snapshot
from mirto.errors import UsageError
from mirto.protocol import SetMotors

logger = logging.getLogger(__name__)

IR_THRESHOLD = 45
LINE_REPORT_MS = 20


class Search(enum.Enum):
    """Returned by the bang-bang table when no sensor sees the line."""

    SEARCH = "search"


SEARCH = Search.SEARCH


class SearchOutcome(enum.Enum):
    FOUND = "found"
    LOST = "lost"


@dataclass(frozen=True)
class BangBangConfig:
    threshold: int = IR_THRESHOLD
    turn_power: int = 115

    def __post_init__(self):
        if not 0 < self.threshold < 100:
            raise UsageError(f"threshold must be in 1..99, got {self.threshold}")
        if not 0 <= self.turn_power <= 255:
            raise UsageError(f"turn power must be in 0..255, got {self.turn_power}")


def clamp_ir(value: int, threshold: int = IR_THRESHOLD) -> int:
    return value if value > threshold else 0


def bang_bang_decision(ir: tuple[int, int, int], config: BangBangConfig = BangBangConfig()) -> Search | SetMotors:
    p = config.turn_power
    match tuple(v > config.threshold for v in ir):
        case (False, False, False):
            return SEARCH
        case (True, True, True):
            return SetMotors(-p, p)
        case (True, True, False) | (True, False, False):
            return SetMotors(0, p)
        case (False, True, True) | (False, False, True):
            return SetMotors(-p, 0)
        case _:
            return SetMotors(0, 0)


def sees_line(ir: tuple[int, ...], threshold: int = IR_THRESHOLD) -> bool:
    return any(v > threshold for v in ir)


def search_maneuver(
    robot: Robot,
    config: BangBangConfig = BangBangConfig(),
    tick_limit: int = 16,
    sweeps: int = 4,
    tick_seconds: float = CONTROL_TICK,
    deadline_ms: int | None = None,
    trace: list[TraceRecord] | None = None,
) -> SearchOutcome:
    """Turn in place one way, then the other, widening the sweep, until a sensor sees the line."""
    if tick_limit <= 0 or sweeps <= 0:
        raise UsageError("tick limit and sweep count must be positive")
    if sees_line(read_ir(robot), config.threshold):
        return SearchOutcome.FOUND

    p = config.turn_power
    with motors_stopped_on_exit(robot):
        for sweep in range(sweeps):
            powers = (p, p) if sweep % 2 == 0 else (-p, -p)
            limit = tick_limit if sweep == 0 else 2 * tick_limit
            robot.reset_count(0)
            robot.reset_count(1)
            robot.set_motors(*powers)
            while max(abs(robot.get_count(0)), abs(robot.get_count(1))) < limit:
                if deadline_ms is not None and robot.now_ms() >= deadline_ms:
                    return SearchOutcome.LOST
                if trace is not None:
                    trace.append(snapshot(robot, powers))
                robot.sleep(tick_seconds)
                if sees_line(read_ir(robot), config.threshold):
                    logger.debug("line found during sweep %d", sweep + 1)
                    return SearchOutcome.FOUND
            logger.debug("sweep %d ended without the line", sweep + 1)
    logger.info("line lost after %d sweeps", sweeps)
    return SearchOutcome.LOST


# ---------------------------------------------------------------------------
# PID
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PidState:
    kp: float = 0.05
    kd: float = 0.045
    ki: float = 0.007
    base_speed: int = 150
    old_error: float = 0.0
    sum_error: float = 0.0
    setpoint: float = 2800.0
    weights: tuple[float, float, float] = (0.0, 2000.0, 4000.0)
    integral_band: float = 400.0
    integral_offset: float = 2000.0
    threshold: int = IR_THRESHOLD

    def __post_init__(self):
        for name in ("kp", "kd", "ki"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise UsageError(f"{name} must be a finite non-negative number, got {value}")
        if not (math.isfinite(self.old_error) and math.isfinite(self.sum_error)):
            raise UsageError("controller memory must be finite")
        if not 0 < self.threshold < 100:
            raise UsageError(f"threshold must be in 1..99, got {self.threshold}")

    def symmetric(self) -> "PidState":
        """Same controller with the proportional setpoint moved to the integral offset."""
        return replace(self, setpoint=self.integral_offset)


@dataclass(frozen=True)
class PidOutput:
    correction: int
    command: SetMotors
    state: PidState
    error: float


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def pid_step(ir: tuple[int, int, int], state: PidState) -> PidOutput:
    clamped = [clamp_ir(v, state.threshold) for v in ir]
    total = sum(clamped)
    if total > 0:
        error = sum(w * c for w, c in zip(state.weights, clamped)) / total
    else:
        # line lost: assume it left on the side it was last seen
        error = state.weights[2] if state.old_error > state.weights[1] else state.weights[0]

    correction = round_half_away(
        state.kp * (error - state.setpoint) + state.kd * (error - state.old_error) + state.ki * state.sum_error
    )
    base = state.base_speed
    if correction < 0:
        command = SetMotors(-(base + correction), base)
    elif correction > 0:
        command = SetMotors(-base, base - correction)
    else:
        command = SetMotors(-base, base)

    if -state.integral_band < error < state.integral_band:
        sum_error = 0.0
    else:
        sum_error = state.sum_error + (error - state.integral_offset)
    return PidOutput(correction, command, replace(state, old_error=error, sum_error=sum_error), error)


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------
@dataclass
class LineFollowResult:
    trace: list[TraceRecord] = field(default_factory=list)
    pid: PidState | None = None
    searches: dict[SearchOutcome, int] = field(default_factory=lambda: dict.fromkeys(SearchOutcome, 0))


def run_line_follower(
    robot: Robot,
    mode: str,
    duration_s: float,
    bang_bang: BangBangConfig = BangBangConfig(),
    pid: PidState = PidState(),
    tick_seconds: float = CONTROL_TICK,
    report_ms: int | None = LINE_REPORT_MS,
) -> LineFollowResult:
    if mode not in ("bangbang", "pid"):
        raise UsageError(f"unknown line follower mode {mode!r}")
    if not duration_s > 0:
        raise UsageError(f"duration must be positive, got {duration_s}")
    if report_ms is not None:
        robot.enable_ir(report_ms)
        robot.enable_encoders(report_ms)

    result = LineFollowResult(pid=pid if mode == "pid" else None)
    end_ms = robot.now_ms() + round(duration_s * 1000)
    with motors_stopped_on_exit(robot):
        while robot.now_ms() < end_ms:
            ir = read_ir(robot)
            if mode == "pid":
                out = pid_step(ir, result.pid)
                result.pid = out.state
                robot.set_motors(out.command.left, out.command.right)
                result.trace.append(
                    snapshot(robot, (out.command.left, out.command.right), out.error, out.correction)
                )
            else:
                decision = bang_bang_decision(ir, bang_bang)
                if decision is SEARCH:
                    outcome = search_maneuver(
                        robot, bang_bang, tick_seconds=tick_seconds, deadline_ms=end_ms, trace=result.trace
                    )
                    result.searches[outcome] += 1
                    continue
                robot.set_motors(decision.left, decision.right)
                result.trace.append(snapshot(robot, (decision.left, decision.right)))
            robot.sleep(tick_seconds)
    return result
