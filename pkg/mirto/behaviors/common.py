import logging
from contextlib import contextmanager
from typing import Protocol

from mirto.errors import TransportError

logger = logging.getLogger(__name__)

IR_SENSORS = (0, 1, 2)
CONTROL_TICK = 0.02


class Robot(Protocol):
    """What a behavior needs from a session (real, simulated or scripted)."""

    def get_ir(self, index: int) -> int: ...
    def get_count(self, wheel: int) -> int: ...
    def reset_count(self, wheel: int) -> None: ...
    def left_bump(self) -> bool: ...
    def right_bump(self) -> bool: ...
    def set_motors(self, left: int, right: int) -> None: ...
    def stop_motors(self) -> None: ...
    def enable_ir(self, ms: int) -> None: ...
    def enable_encoders(self, ms: int) -> None: ...
    def sleep(self, seconds: float) -> None: ...
    def now_ms(self) -> int: ...
    def pose(self) -> tuple[float, float, float] | None: ...


def read_ir(robot: Robot) -> tuple[int, int, int]:
    return tuple(robot.get_ir(i) for i in IR_SENSORS)


@contextmanager
def motors_stopped_on_exit(robot: Robot):
    """Whatever happens inside, the last motor command sent is a stop."""
    try:
        yield
    finally:
        try:
            robot.stop_motors()
        except TransportError as e:
            logger.warning("could not stop motors: %s", e)
