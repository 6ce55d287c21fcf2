import threading

import pytest

from mirto.errors import UsageError
from mirto.protocol import BumpReport, EncoderReport, IRReport, decode
from mirto.sim.emulator import Emulator, run_emulator
from mirto.sim.physics import RobotState, SimConfig
from mirto.sim.world import parse_world
from mirto.transport import MAX_LINE_BYTES, TransportEndpoint, listen, loopback_pair, open_connection


@pytest.fixture
def bench(straight_world):
    client, device = loopback_pair(read_timeout_ms=100)
    emulator = Emulator(device, straight_world, SimConfig(rng_seed=1))
    yield client, emulator
    client.close()
    device.close()


def received(client):
    lines = []
    while (line := client.recv_line(timeout_ms=0)) is not None:
        lines.append(line)
    return lines


def reports(client, kind):
    return [m for m in map(decode, received(client)) if isinstance(m, kind)]


class TestDeviceSide:
    def test_motor_command_drives_the_encoders(self, bench):
        client, emulator = bench
        client.send_line("E,A,20")
        client.send_line("M,m,100,100")
        emulator.advance(20)
        counts = [r.as_dict() for r in reports(client, EncoderReport)]
        assert len(counts) == 10
        assert counts[-1][0] > counts[0][0] > 0
        assert counts[-1][1] > counts[0][1] > 0

    def test_ir_reports_every_hundred_virtual_ms(self, bench):
        client, emulator = bench
        client.send_line("R,A,100")
        emulator.advance(100)
        ir = reports(client, IRReport)
        assert len(ir) == 10
        assert ir[0].as_dict() == {0: 100, 1: 100, 2: 100}

    def test_zero_interval_disables(self, bench):
        client, emulator = bench
        client.send_line("R,A,100")
        emulator.advance(50)
        received(client)
        client.send_line("R,A,0")
        emulator.advance(100)
        assert reports(client, IRReport) == []

    def test_malformed_command_is_answered_and_ignored(self, bench):
        client, emulator = bench
        before = emulator.state
        client.send_line("M,m,x")
        emulator.advance(1)
        assert received(client) == ["!parse-error:4"]
        assert emulator.state.power_left == before.power_left == 0

    def test_oversized_command_is_answered_and_the_next_one_runs(self, bench):
        client, emulator = bench
        client.send_line("M,m," + "1" * MAX_LINE_BYTES)
        client.send_line("M,m,-115,115")
        emulator.advance(1)
        assert received(client) == [f"!parse-error:{MAX_LINE_BYTES}"]
        assert (emulator.state.power_left, emulator.state.power_right) == (-115, 115)
        client.send_line("M,m,0,0")
        emulator.advance(1)
        assert emulator.state.power_right == 0

    def test_analog_levels(self, bench):
        client, emulator = bench
        client.send_line("I,A,100")
        emulator.advance(10)
        assert received(client) == ["@I,a,3,{0:320,1:340,2:329}"]

    def test_pullup_input_reads_high(self, bench):
        client, emulator = bench
        client.send_line("I,p,5,2")
        client.send_line("I,p,6,1")
        emulator.advance(1)
        assert received(client) == ["@I,d,1,{5:1}", "@I,d,1,{6:0}"]

    def test_unknown_commands_are_ignored(self, bench):
        client, emulator = bench
        client.send_line("X,q,1")
        emulator.advance(1)
        assert received(client) == []

    def test_out_of_range_power_is_clamped(self, bench):
        client, emulator = bench
        client.send_line("M,m,-999,300")
        emulator.advance(1)
        assert (emulator.state.power_left, emulator.state.power_right) == (-255, 255)

    def test_encoder_reset(self, bench):
        client, emulator = bench
        client.send_line("M,m,-255,255")
        emulator.advance(50)
        client.send_line("E,r,1")
        client.send_line("M,m,0,0")
        emulator.advance(1)
        assert emulator.state.encoder_right == 0
        assert emulator.state.encoder_left < 0

    def test_bump_edge_is_reported_at_once(self):
        world = parse_world("track 0.03 -0.5 0 0.5 0\nobstacle 0.2 -1 0.2 1")
        client, device = loopback_pair()
        emulator = Emulator(device, world, state=RobotState(x=0.0))
        with client, device:
            client.send_line("B,A,5000")
            client.send_line("M,m,-255,255")
            for _ in range(100):
                emulator.advance(1)
                bumps = reports(client, BumpReport)
                if bumps:
                    break
            assert bumps == [BumpReport.of({0: 1, 1: 1})]
            assert emulator.now_ms() < 5000


class TestLockStep:
    def test_session_sees_the_line(self, simulate, straight_world):
        session = simulate(straight_world).session
        assert [session.get_ir(i) for i in range(3)] == [100, 100, 100]

    def test_forward_second(self, simulate, straight_world):
        robot = simulate(straight_world)
        session = robot.session
        session.set_motors(-115, 115)
        session.sleep(1.0)
        x, y, theta = session.pose()
        assert x == pytest.approx(115 / 255 * 0.5, rel=1e-9)
        assert (y, theta) == (0.0, 0.0)
        assert session.get_count(1) > 0 > session.get_count(0)

    def test_stop_holds_the_pose(self, simulate, straight_world):
        session = simulate(straight_world).session
        session.set_motors(-115, 115)
        session.sleep(0.5)
        session.stop_motors()
        session.sleep(0.02)
        pose = session.pose()
        session.sleep(1.0)
        assert session.pose() == pose

    def test_virtual_time_is_exact(self, simulate, straight_world):
        session = simulate(straight_world, warm_up=False).session
        session.sleep(0.5)
        assert session.now_ms() == 500

    def test_many_short_sleeps_equal_one_long_one(self, simulate):
        world = parse_world("track 0.03 -0.5 0 12 0\nir-noise 3")
        short, long = simulate(world, seed=9), simulate(world, seed=9)
        for robot in (short, long):
            robot.session.enable_ir(10)
            robot.session.set_motors(100, -60)
        for _ in range(100):
            short.session.sleep(0.01)
        long.session.sleep(1.0)
        assert short.emulator.state == long.emulator.state
        assert short.session.cache == long.session.cache


class TestServing:
    def test_realtime_over_tcp(self, straight_world):
        with listen(TransportEndpoint.parse("tcp:127.0.0.1:0")) as listener:
            host, port = listener.address
            client = open_connection(TransportEndpoint.parse(f"tcp:{host}:{port}"))
            device = listener.accept(timeout_ms=2000)
        emulator = Emulator(device, straight_world)
        server = threading.Thread(target=emulator.serve_realtime, daemon=True)
        server.start()
        with client:
            client.send_line("R,A,50")
            line = client.recv_line(timeout_ms=2000)
            while line is not None and not line.startswith("@R"):
                line = client.recv_line(timeout_ms=2000)
            assert decode(line) == IRReport.of({0: 100, 1: 100, 2: 100})
        server.join(timeout=5)
        assert not server.is_alive()
        device.close()

    def test_loopback_cannot_be_served(self, straight_world):
        with pytest.raises(UsageError):
            run_emulator(TransportEndpoint.parse("loopback"), straight_world)
