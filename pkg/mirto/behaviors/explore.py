"""Random exploration: drive forward, back off a bump, turn a random way for a random time."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence, TypeVar

import numpy as np

from mirto.behaviors.common import CONTROL_TICK, Robot, motors_stopped_on_exit
from mirto.behaviors.trace import TraceRecord, snapshot
from mirto.contracts import power_in_range
from mirto.errors import UsageError

logger = logging.getLogger(__name__)

FORWARD = "forward"
BACKWARD = "backward"
ROTATE = "rotate"

A = TypeVar("A")


@dataclass(frozen=True)
class ExploreConfig:
    forward_power: int = 115
    backoff_seconds: float = 0.5
    rotation_min: float = 0.3
    rotation_max: float = 1.5
    rng_seed: int = 0
    tick_seconds: float = CONTROL_TICK

    def __post_init__(self):
        if not power_in_range(self.forward_power):
            raise UsageError(f"forward power must be an integer in -255..255, got {self.forward_power!r}")
        if not self.backoff_seconds > 0:
            raise UsageError(f"backoff must be positive, got {self.backoff_seconds}")
        if not 0 <= self.rotation_min <= self.rotation_max:
            raise UsageError(f"rotation range [{self.rotation_min}, {self.rotation_max}] is empty")
        if not self.tick_seconds > 0:
            raise UsageError(f"control tick must be positive, got {self.tick_seconds}")


@dataclass
class Phase:
    name: str
    start_ms: int
    ticks: int = 0
    side: str | None = None
    # the drawn rotation time before it is rounded to whole control ticks
    requested_seconds: float | None = None

    def seconds(self, tick_seconds: float = CONTROL_TICK) -> float:
        return self.ticks * tick_seconds


@dataclass
class ExploreResult:
    trace: list[TraceRecord] = field(default_factory=list)
    phases: list[Phase] = field(default_factory=list)

    @property
    def rotations(self) -> list[Phase]:
        return [p for p in self.phases if p.name == ROTATE]


def pick_random_action(actions: Sequence[A], rng: np.random.Generator) -> A:
    """Choose one of `actions` uniformly. Nothing is called here; the caller runs the pick."""
    if not actions:
        raise UsageError("cannot pick from an empty list of actions")
    return actions[int(rng.integers(len(actions)))]


def run_explore(robot: Robot, config: ExploreConfig, duration_s: float) -> ExploreResult:
    if not duration_s > 0:
        raise UsageError(f"duration must be positive, got {duration_s}")
    rng = np.random.default_rng(config.rng_seed)
    power = config.forward_power
    forward = (-power, power)
    backward = (power, -power)

    def rotate_left() -> tuple[int, int]:
        return power, power

    def rotate_right() -> tuple[int, int]:
        return -power, -power

    backoff_ticks = max(1, round(config.backoff_seconds / config.tick_seconds))
    result = ExploreResult()
    end_ms = robot.now_ms() + round(duration_s * 1000)

    def enter(name: str, powers: tuple[int, int], **details) -> Phase:
        robot.set_motors(*powers)
        phase = Phase(name, robot.now_ms(), **details)
        result.phases.append(phase)
        logger.debug("explore: %s at %d ms %s", name, phase.start_ms, details or "")
        return phase

    with motors_stopped_on_exit(robot):
        powers = forward
        phase = enter(FORWARD, powers)
        remaining = 0
        while robot.now_ms() < end_ms:
            if phase.name == FORWARD:
                if robot.left_bump() or robot.right_bump():
                    powers = backward
                    phase = enter(BACKWARD, powers)
                    remaining = backoff_ticks
            elif remaining == 0:
                if phase.name == BACKWARD:
                    action: Callable[[], tuple[int, int]] = pick_random_action((rotate_left, rotate_right), rng)
                    requested = float(rng.uniform(config.rotation_min, config.rotation_max))
                    remaining = max(1, round(requested / config.tick_seconds))
                    powers = action()
                    side = "left" if action is rotate_left else "right"
                    phase = enter(ROTATE, powers, side=side, requested_seconds=requested)
                else:
                    powers = forward
                    phase = enter(FORWARD, powers)

            result.trace.append(snapshot(robot, powers))
            phase.ticks += 1
            robot.sleep(config.tick_seconds)
            if remaining:
                remaining -= 1
    return result
