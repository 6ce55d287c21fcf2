import pytest

from mirto.behaviors.monitor import MonitorEvent, log_ir_samples, run_monitor
from mirto.errors import UsageError


def test_ir_printed_every_three_seconds(simulate, straight_world):
    session = simulate(straight_world).session
    result = run_monitor(session, duration_s=9.0)
    ir = result.of_kind("ir")
    assert len(ir) == 3
    assert [e.values for e in ir] == [(100, 100, 100)] * 3
    assert ir[0].describe() == "IR sensor 0 -> 100; IR sensor 1 -> 100; IR sensor 2 -> 100"


def test_held_bump_is_one_edge(scripted):
    robot = scripted()
    robot.on_sleep = lambda r: setattr(r, "bumps", [100 <= r.t_ms < 300, False])
    result = run_monitor(robot, duration_s=1.0)
    assert [(e.kind, e.side, e.t_ms) for e in result.events] == [("pressed", "left", 100), ("released", "left", 300)]
    assert result.events[0].describe() == "Left bump pressed"
    assert result.events[1].describe() == "Left bump released"


def test_both_bumps_exit_within_a_tick(scripted):
    robot = scripted()
    robot.on_sleep = lambda r: setattr(r, "bumps", [r.t_ms >= 200] * 2)
    result = run_monitor(robot)
    assert result.events[-1] == MonitorEvent(200, "exit")
    assert result.events[-1].describe() == "Both bumps pressed, bye"
    assert robot.t_ms == 200
    assert len(result.trace) == 11


def test_monitor_never_drives(scripted):
    robot = scripted()
    run_monitor(robot, duration_s=0.5)
    assert robot.motors == []


def test_bad_interval(scripted):
    with pytest.raises(UsageError):
        run_monitor(scripted(), print_interval_ms=0)


class TestLogIrSamples:
    def test_nine_seconds_gives_three_samples_oldest_first(self, scripted):
        robot = scripted()
        robot.on_sleep = lambda r: setattr(r, "ir", [r.t_ms // 1000] * 3)
        assert log_ir_samples(robot, duration_s=9.0) == [3, 3, 3, 6, 6, 6, 9, 9, 9]

    def test_zero_duration(self, scripted):
        assert log_ir_samples(scripted(ir=(50, 60, 70)), duration_s=0) == []

    def test_simulated(self, simulate, straight_world):
        assert log_ir_samples(simulate(straight_world).session, duration_s=9.0) == [100] * 9

    def test_negative_duration(self, scripted):
        with pytest.raises(UsageError):
            log_ir_samples(scripted(), duration_s=-1)
