import random
import time
from dataclasses import replace

import pytest

from mirto.client import ClientSession, PinCache, apply_event, open_session, process_analog_values
from mirto.contracts import CALLER, ContractViolation
from mirto.errors import OpenError, TransportError, UsageError
from mirto.protocol import AnalogReport, BumpReport, DigitalReport, EncoderReport, IRReport
from mirto.sim.clock import SimClock
from mirto.transport import loopback_pair


def wait_until(predicate, timeout=2.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.005)
    return False


@pytest.fixture
def wired():
    client, device = loopback_pair(read_timeout_ms=200)
    session = ClientSession(client)
    yield session, device
    session.close()
    device.close()


def drain(device, timeout_ms=50):
    lines = []
    while (line := device.recv_line(timeout_ms=timeout_ms)) is not None:
        lines.append(line)
    return lines


class TestPinCache:
    def test_three_pin_analog_report(self):
        cache = PinCache()
        process_analog_values(cache, AnalogReport.of({0: 320, 1: 340, 2: 329}))
        assert cache.analog == [320, 340, 329] + [0] * 13

    def test_empty_report(self):
        cache = PinCache()
        process_analog_values(cache, AnalogReport(()))
        assert cache == PinCache()

    def test_last_slot(self):
        cache = PinCache()
        process_analog_values(cache, AnalogReport.of({15: 7}))
        assert cache.analog[15] == 7
        assert cache.analog[:15] == [0] * 15

    def test_index_past_the_cache_drops_the_whole_report(self):
        cache = PinCache()
        assert not process_analog_values(cache, AnalogReport.of({0: 5, 16: 1}))
        assert cache == PinCache()

    def test_out_of_range_values_are_clamped(self):
        cache = PinCache()
        apply_event(cache, IRReport.of({0: 150, 1: -3}))
        assert cache.ir == [100, 0, 0]

    def test_bump_report(self):
        cache = PinCache()
        apply_event(cache, BumpReport.of({0: 1, 1: 0}))
        assert (cache.bump_left, cache.bump_right) == (True, False)

    def test_reports_only_touch_their_own_slots(self):
        rng = random.Random(11)
        makers = [
            ("analog", lambda: AnalogReport.of({rng.randrange(16): rng.randrange(1024)})),
            ("digital", lambda: DigitalReport.of({rng.randrange(16): rng.randrange(2)})),
            ("ir", lambda: IRReport.of({rng.randrange(3): rng.randrange(101)})),
            ("encoder", lambda: EncoderReport.of({rng.randrange(2): rng.randrange(-1000, 1000)})),
        ]
        cache = PinCache()
        for _ in range(2000):
            slot, make = rng.choice(makers)
            before = replace(cache, **{name: list(getattr(cache, name)) for name in ("analog", "digital", "ir", "encoder")})
            apply_event(cache, make())
            for other in ("analog", "digital", "ir", "encoder"):
                if other != slot:
                    assert getattr(cache, other) == getattr(before, other)
            assert (cache.bump_left, cache.bump_right) == (before.bump_left, before.bump_right)

    def test_same_events_same_cache(self):
        rng = random.Random(5)
        events = [IRReport.of({rng.randrange(3): rng.randrange(101)}) for _ in range(300)]
        events += [EncoderReport.of({0: i, 1: -i}) for i in range(50)]
        first, second = PinCache(), PinCache()
        for event in events:
            apply_event(first, event)
        for event in events:
            apply_event(second, event)
        assert first == second


class TestSession:
    def test_fresh_cache_reads_zero(self, wired):
        session, _ = wired
        assert session.get_ir(0) == 0
        assert session.get_count(1) == 0
        assert not session.left_bump() and not session.right_bump()

    def test_ir_report_reaches_the_cache(self, wired):
        session, device = wired
        device.send_line("@R,i,3,{0:50,1:0,2:0}")
        assert wait_until(lambda: session.get_ir(0) == 50)

    def test_bump_report_reaches_the_cache(self, wired):
        session, device = wired
        device.send_line("@B,b,2,{0:1,1:0}")
        assert wait_until(session.left_bump)
        assert not session.right_bump()

    def test_reset_then_report(self, wired):
        session, device = wired
        device.send_line("@E,e,2,{0:40,1:40}")
        assert wait_until(lambda: session.get_count(0) == 40)
        session.reset_count(0)
        assert session.get_count(0) == 0
        assert drain(device) == ["E,r,0"]
        device.send_line("@E,e,1,{0:5}")
        assert wait_until(lambda: session.get_count(0) == 5)

    def test_unknown_and_malformed_lines_leave_the_cache_alone(self, wired):
        session, _ = wired
        for line in ("!hello", "X,q,1", "@I,a,2,{0:1}", "@Z,z,0,{}"):
            session.handle_line(line)
        assert session.cache == PinCache()

    def test_digital_write(self, wired):
        session, device = wired
        session.digital_write(11, 1)
        session.digital_write(0, 0)
        assert drain(device) == ["I,d,11,1", "I,d,0,0"]

    @pytest.mark.parametrize(
        "pins, lines",
        [([11, 12, 13], ["I,d,11,1", "I,d,12,1", "I,d,13,1"]), ([], []), ([5, 5], ["I,d,5,1", "I,d,5,1"])],
    )
    def test_digital_write_all(self, wired, pins, lines):
        session, device = wired
        session.digital_write_all(pins, 1)
        assert drain(device) == lines

    def test_set_motors(self, wired):
        session, device = wired
        session.set_motors(-115, 115)
        session.stop_motors()
        session.stop_motors()
        assert drain(device) == ["M,m,-115,115", "M,m,0,0", "M,m,0,0"]

    def test_set_motors_out_of_range_sends_nothing(self, wired):
        session, device = wired
        with pytest.raises(ContractViolation) as info:
            session.set_motors(300, 0)
        assert info.value.blamed == CALLER
        assert str(info.value) == "contract-violation set_motors blame=caller value=(300,0)"
        assert drain(device) == []

    def test_enable_streams(self, wired):
        session, device = wired
        session.enable_ir(100)
        session.enable_ir(0)
        session.enable_bumpers(50)
        session.enable_encoders(20)
        session.enable_analog(1000)
        assert drain(device) == ["R,A,100", "R,A,0", "B,A,50", "E,A,20", "I,A,1000"]

    @pytest.mark.parametrize(
        "call",
        [
            lambda s: s.get_ir(3),
            lambda s: s.reset_count(2),
            lambda s: s.get_count(-1),
            lambda s: s.enable_ir(-1),
            lambda s: s.enable_bumpers(70000),
            lambda s: s.digital_write(16, 1),
            lambda s: s.digital_write(1, 2),
            lambda s: s.sleep(-1),
            lambda s: s.get_ir(True),
            lambda s: s.reset_count(False),
        ],
    )
    def test_usage_errors(self, wired, call):
        session, _ = wired
        with pytest.raises(UsageError):
            call(session)

    def test_tick_marker_releases_waiters(self, wired):
        session, _ = wired
        session.handle_line("!tick:5")
        session._wait_for_tick(5)

    def test_malformed_tick_marker_fails_waiters_fast(self):
        client, device = loopback_pair(read_timeout_ms=200)
        with ClientSession(client, clock=SimClock(0.01)) as session, device:
            device.send_line("!tick:x")
            device.send_line("@R,i,3,{0:10,1:20,2:30}")
            assert wait_until(lambda: session.get_ir(2) == 30)
            started = time.monotonic()
            with pytest.raises(TransportError, match="tick marker"):
                session.sleep(0.05)
            assert time.monotonic() - started < 1.0

    def test_close_twice(self, wired):
        session, _ = wired
        session.close()
        session.close()


def test_open_session_on_a_missing_device():
    with pytest.raises(OpenError):
        open_session("/dev/definitely-not-a-mirto-port")


def test_open_session_over_an_existing_connection():
    client, device = loopback_pair()
    with open_session(client) as session, device:
        session.set_motors(0, 0)
        assert device.recv_line(timeout_ms=200) == "M,m,0,0"
