"""Runtime contracts at module boundaries.

A guarded operation checks its precondition on the inputs (a failure blames the caller)
and its postcondition on the result (a failure blames the callee). Violations are
ordinary exceptions so behaviors can still stop the motors on the way out.
"""
import functools
from fractions import Fraction
from typing import Any, Callable

from mirto.errors import MirtoError

CALLER = "caller"
CALLEE = "callee"

MIN_SPEED = -255
MAX_SPEED = 255


class ContractViolation(MirtoError):
    def __init__(self, guard_name: str, blamed: str, value: str):
        self.guard_name = guard_name
        self.blamed = blamed
        self.value = value
        super().__init__(f"contract-violation {guard_name} blame={blamed} value={value}")


def _describe_args(*args, **kwargs) -> str:
    parts = [repr(a) for a in args] + [f"{k}={v!r}" for k, v in kwargs.items()]
    return ",".join(parts)


def guard(
    name: str,
    pre: Callable[..., bool] | None = None,
    post: Callable[[Any], bool] | None = None,
    operation: Callable | None = None,
    describe: Callable[..., str] = _describe_args,
):
    """Attach a pre/postcondition to `operation`, or act as a decorator when it is omitted."""

    def wrap(fn):
        @functools.wraps(fn)
        def guarded(*args, **kwargs):
            if pre is not None and not pre(*args, **kwargs):
                raise ContractViolation(name, CALLER, describe(*args, **kwargs))
            result = fn(*args, **kwargs)
            if post is not None and not post(result):
                raise ContractViolation(name, CALLEE, repr(result))
            return result

        guarded.contract_name = name
        return guarded

    return wrap(operation) if operation is not None else wrap


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------
def is_exact_integer(value: object) -> bool:
    if isinstance(value, bool):
        return False
    if isinstance(value, int):
        return True
    return isinstance(value, Fraction) and value.denominator == 1


def check_speed(current: int, delta: object) -> bool:
    """True iff delta is an exact integer and current + delta stays within the motor range."""
    return is_exact_integer(delta) and MIN_SPEED <= current + delta <= MAX_SPEED


def power_in_range(power: object) -> bool:
    return is_exact_integer(power) and MIN_SPEED <= power <= MAX_SPEED


# ---------------------------------------------------------------------------
# Speed accumulator
# ---------------------------------------------------------------------------
class SpeedAccumulator:
    """Running speed that never leaves [-255, 255]; starts at 0."""

    def __init__(self):
        self._speed = 0

    @property
    def speed(self) -> int:
        return self._speed

    @guard(
        "added_speed",
        pre=lambda acc, delta: check_speed(acc.speed, delta),
        describe=lambda acc, delta: repr(delta),
    )
    def added_speed(self, delta: int) -> None:
        self._speed = int(self._speed + delta)

    @guard("current_speed", post=lambda v: is_exact_integer(v) and MIN_SPEED <= v <= MAX_SPEED)
    def current_speed(self) -> int:
        return self._speed
