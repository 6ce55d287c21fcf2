"""Clocks behind `session.sleep`: virtual time for the simulator, wall time for hardware."""
import logging
import time
from typing import Callable, Protocol

from mirto.errors import UsageError

logger = logging.getLogger(__name__)


class Clock(Protocol):
    def now(self) -> float: ...

    def sleep(self, seconds: float) -> int | None:
        """Sleep; under simulation, return the step index the device must reach."""
        ...


class WallClock:
    def __init__(self):
        self._start = time.monotonic()

    def now(self) -> float:
        return time.monotonic() - self._start

    def sleep(self, seconds: float) -> None:
        if seconds < 0:
            raise UsageError(f"cannot sleep a negative time: {seconds}")
        time.sleep(seconds)
        return None


class SimClock:
    """Fixed-step virtual time. Sleeping grants whole steps to the driver (the emulator)."""

    def __init__(self, dt: float = 0.01, driver: Callable[[int], None] | None = None):
        if dt <= 0:
            raise UsageError("dt must be positive")
        self.dt = dt
        self.step_index = 0
        self._driver = driver

    def now(self) -> float:
        return self.step_index * self.dt

    def steps_for(self, seconds: float) -> int:
        return round(seconds / self.dt)

    def sleep(self, seconds: float) -> int | None:
        if seconds < 0:
            raise UsageError(f"cannot sleep a negative time: {seconds}")
        steps = self.steps_for(seconds)
        if steps == 0:
            return None
        self.step_index += steps
        if self._driver is not None:
            self._driver(steps)
        return self.step_index


def virtual_sleep(clock: Clock, seconds: float) -> int | None:
    return clock.sleep(seconds)
