from pathlib import Path

import pytest

from mirto.sim.harness import SimulatedRobot
from mirto.sim.physics import SimConfig
from mirto.sim.world import WorldModel, load_world, parse_world
from mirto.transport import loopback_pair


WORLDS = Path(__file__).resolve().parent.parent / "worlds"

CENTRED_STRAIGHT = """
track 0.03 -0.5 0 12 0
start 0 0 0
"""


@pytest.fixture
def world_path():
    def path(name: str) -> Path:
        return WORLDS / f"{name}.txt"

    return path


@pytest.fixture
def straight_world() -> WorldModel:
    return parse_world(CENTRED_STRAIGHT, name="centred-straight")


@pytest.fixture
def box_world() -> WorldModel:
    return load_world(WORLDS / "box.txt")


@pytest.fixture
def loopback():
    client, device = loopback_pair(read_timeout_ms=200)
    yield client, device
    client.close()
    device.close()


@pytest.fixture
def simulate():
    """Factory for warmed-up simulated sessions; everything is closed after the test."""
    robots = []

    def make(world: WorldModel, seed: int = 0, warm_up: bool = True, **config):
        robot = SimulatedRobot(world, SimConfig(rng_seed=seed, **config))
        robots.append(robot)
        if warm_up:
            robot.session.warm_up()
        return robot

    yield make
    for robot in robots:
        robot.close()


class ScriptedRobot:
    """A robot whose sensors are set by the test and whose motor commands are recorded."""

    def __init__(self, ir=(0, 0, 0), step_ms: int = 20):
        self.ir = list(ir)
        self.bumps = [False, False]
        self.counts = [0, 0]
        self.motors: list[tuple[int, int]] = []
        self.enabled: list[tuple[str, int]] = []
        self.t_ms = 0
        self.step_ms = step_ms
        self.on_sleep = None

    def get_ir(self, index):
        return self.ir[index]

    def get_count(self, wheel):
        return self.counts[wheel]

    def reset_count(self, wheel):
        self.counts[wheel] = 0

    def left_bump(self):
        return self.bumps[0]

    def right_bump(self):
        return self.bumps[1]

    def set_motors(self, left, right):
        self.motors.append((left, right))

    def stop_motors(self):
        self.set_motors(0, 0)

    def enable_ir(self, ms):
        self.enabled.append(("ir", ms))

    def enable_encoders(self, ms):
        self.enabled.append(("encoder", ms))

    def sleep(self, seconds):
        self.t_ms += round(seconds * 1000)
        if self.on_sleep is not None:
            self.on_sleep(self)

    def now_ms(self):
        return self.t_ms

    def pose(self):
        return None


@pytest.fixture
def scripted():
    return ScriptedRobot
