import random
from fractions import Fraction

import pytest

from mirto.contracts import (
    CALLEE,
    CALLER,
    ContractViolation,
    SpeedAccumulator,
    check_speed,
    guard,
    is_exact_integer,
)


@pytest.mark.parametrize(
    "current, delta, ok",
    [
        (0, 255, True),
        (0, 256, False),
        (0, 0, True),
        (0, 1.5, False),
        (0, -255, True),
        (0, -256, False),
        (100, 155, True),
        (0, Fraction(4, 2), True),
        (0, Fraction(1, 2), False),
        (0, 2.0, False),
        (0, True, False),
        (0, "5", False),
    ],
)
def test_check_speed(current, delta, ok):
    assert check_speed(current, delta) is ok


def test_exact_integers():
    assert is_exact_integer(3)
    assert is_exact_integer(Fraction(6, 3))
    assert not is_exact_integer(3.0)
    assert not is_exact_integer(False)


class TestSpeedAccumulator:
    def test_starts_at_zero(self):
        assert SpeedAccumulator().current_speed() == 0

    def test_accepted_change(self):
        acc = SpeedAccumulator()
        acc.added_speed(100)
        assert acc.current_speed() == 100

    def test_rejected_change_keeps_the_speed(self):
        acc = SpeedAccumulator()
        acc.added_speed(200)
        with pytest.raises(ContractViolation) as info:
            acc.added_speed(100)
        assert info.value.blamed == CALLER
        assert info.value.guard_name == "added_speed"
        assert str(info.value) == "contract-violation added_speed blame=caller value=100"
        assert acc.current_speed() == 200

    def test_lower_bound(self):
        acc = SpeedAccumulator()
        acc.added_speed(100)
        with pytest.raises(ContractViolation):
            acc.added_speed(-356)
        acc.added_speed(-355)
        assert acc.current_speed() == -255

    def test_non_integer_change(self):
        acc = SpeedAccumulator()
        with pytest.raises(ContractViolation):
            acc.added_speed(1.5)
        assert acc.current_speed() == 0

    def test_random_sequences_stay_in_range(self):
        rng = random.Random(7)
        acc = SpeedAccumulator()
        rejected = 0
        for _ in range(10_000):
            delta = rng.choice([rng.randint(-600, 600), rng.randint(-20, 20), rng.random() * 10])
            before = acc.current_speed()
            try:
                acc.added_speed(delta)
            except ContractViolation as e:
                rejected += 1
                assert e.blamed == CALLER
                assert acc.current_speed() == before
            assert -255 <= acc.current_speed() <= 255
            assert isinstance(acc.current_speed(), int)
        assert rejected > 0


class TestGuard:
    def test_transparent_when_predicates_hold(self):
        double = guard("double", pre=lambda x: True, post=lambda r: True, operation=lambda x: 2 * x)
        assert double(21) == 42
        assert double.contract_name == "double"

    def test_precondition_blames_the_caller(self):
        @guard("set_power", pre=lambda p: -255 <= p <= 255)
        def set_power(p):
            return p

        with pytest.raises(ContractViolation) as info:
            set_power(300)
        assert (info.value.blamed, info.value.value) == (CALLER, "300")

    def test_postcondition_blames_the_callee(self):
        broken = guard("broken", post=lambda r: False, operation=lambda: 7)
        with pytest.raises(ContractViolation) as info:
            broken()
        assert (info.value.blamed, info.value.value) == (CALLEE, "7")

    def test_violation_is_not_raised_when_there_are_no_predicates(self):
        plain = guard("plain", operation=lambda a, b=0: a + b)
        assert plain(1, b=2) == 3
