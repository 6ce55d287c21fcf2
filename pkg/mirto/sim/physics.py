"""Differential-drive kinematics, encoders, bump switches and IR reflectance sensing."""
import math
from dataclasses import dataclass, replace

import numpy as np

from mirto.errors import UsageError
from mirto.sim.world import WorldModel

MAX_POWER = 255


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    max_wheel_speed: float = 0.5
    wheel_base: float = 0.11
    wheel_diameter: float = 0.06
    ticks_per_revolution: int = 128
    # sensor a (left), b (centre), c (right) on the front rim, robot frame, x forward, y left
    ir_offsets: tuple[tuple[float, float], ...] = ((0.08, 0.01), (0.08, 0.0), (0.08, -0.01))
    ir_radius: float = 0.01
    body_radius: float = 0.08
    bump_margin: float = 0.012
    bump_overlap: float = 0.26
    deadband: int = 0
    rng_seed: int = 0
    analog_levels: tuple[int, ...] = (320, 340, 329)

    def __post_init__(self):
        positive = {
            "dt": self.dt,
            "max_wheel_speed": self.max_wheel_speed,
            "wheel_base": self.wheel_base,
            "wheel_diameter": self.wheel_diameter,
            "ticks_per_revolution": self.ticks_per_revolution,
            "ir_radius": self.ir_radius,
            "body_radius": self.body_radius,
            "bump_margin": self.bump_margin,
        }
        for name, value in positive.items():
            if not value > 0:
                raise UsageError(f"{name} must be positive, got {value}")
        if self.dt > 0.02:
            raise UsageError(f"dt must be at most 0.02 s, got {self.dt}")
        if len(self.ir_offsets) != 3:
            raise UsageError("the robot carries exactly three IR sensors")
        if not 0 <= self.rng_seed < 2**64:
            raise UsageError("rng seed must be a non-negative 64-bit integer")
        if not 0 <= self.deadband <= MAX_POWER:
            raise UsageError(f"deadband must be in 0..{MAX_POWER}")
        if len(self.analog_levels) > 16:
            raise UsageError("at most 16 analog pins")


@dataclass(frozen=True)
class RobotState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    power_left: int = 0
    power_right: int = 0
    encoder_left: int = 0
    encoder_right: int = 0
    # fractional ticks since the last reset; the counters are these truncated toward zero
    travel_left: float = 0.0
    travel_right: float = 0.0
    bump_left: bool = False
    bump_right: bool = False

    @classmethod
    def at(cls, pose: tuple[float, float, float]) -> "RobotState":
        x, y, theta = pose
        return cls(x=x, y=y, theta=theta)

    @property
    def pose(self) -> tuple[float, float, float]:
        return self.x, self.y, self.theta


def shaft_speed(power: int, config: SimConfig) -> float:
    """Wheel surface speed in m/s along the motor's own positive direction."""
    if abs(power) < config.deadband:
        return 0.0
    return power / MAX_POWER * config.max_wheel_speed


def step_sim(state: RobotState, world: WorldModel, config: SimConfig, dt: float) -> RobotState:
    """Advance one step. The left motor is mounted mirrored: forward is (-p, +p)."""
    if not dt > 0:
        raise UsageError(f"dt must be positive, got {dt}")
    shaft_left = shaft_speed(state.power_left, config)
    shaft_right = shaft_speed(state.power_right, config)
    v_left, v_right = -shaft_left, shaft_right

    v = (v_left + v_right) / 2
    omega = (v_right - v_left) / config.wheel_base
    theta = state.theta + omega * dt
    if omega == 0.0:
        x = state.x + v * math.cos(state.theta) * dt
        y = state.y + v * math.sin(state.theta) * dt
    else:
        radius = v / omega
        x = state.x + radius * (math.sin(theta) - math.sin(state.theta))
        y = state.y - radius * (math.cos(theta) - math.cos(state.theta))

    if world.obstacles and (
        world.clearance(x, y) < config.body_radius or world.crosses_obstacle(state.x, state.y, x, y)
    ):
        x, y = state.x, state.y

    ticks_per_metre = config.ticks_per_revolution / (math.pi * config.wheel_diameter)
    travel_left = state.travel_left + shaft_left * dt * ticks_per_metre
    travel_right = state.travel_right + shaft_right * dt * ticks_per_metre
    bump_left, bump_right = bump_flags(x, y, theta, world, config)

    return replace(
        state,
        x=x,
        y=y,
        theta=theta,
        travel_left=travel_left,
        travel_right=travel_right,
        encoder_left=int(travel_left),
        encoder_right=int(travel_right),
        bump_left=bump_left,
        bump_right=bump_right,
    )


def bump_flags(x: float, y: float, theta: float, world: WorldModel, config: SimConfig) -> tuple[bool, bool]:
    left = right = False
    for qx, qy in world.contacts(x, y, config.body_radius + config.bump_margin):
        bearing = _wrap(math.atan2(qy - y, qx - x) - theta)
        if abs(bearing) > math.pi / 2:
            continue
        left = left or bearing >= -config.bump_overlap
        right = right or bearing <= config.bump_overlap
    return left, right


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def sensor_position(state: RobotState, config: SimConfig, index: int) -> tuple[float, float]:
    ox, oy = config.ir_offsets[index]
    cos_t, sin_t = math.cos(state.theta), math.sin(state.theta)
    return state.x + ox * cos_t - oy * sin_t, state.y + ox * sin_t + oy * cos_t


def sample_ir(state: RobotState, world: WorldModel, config: SimConfig, index: int, step: int = 0) -> int:
    """Reflectance 0-100, high over the line; noise is seeded by (seed, step, sensor)."""
    if index not in (0, 1, 2):
        raise UsageError(f"IR sensor index must be 0..2, got {index}")
    sx, sy = sensor_position(state, config, index)
    distance = world.distance_to_track(sx, sy)
    edge = world.track_width / 2
    coverage = (edge + config.ir_radius / 2 - distance) / config.ir_radius
    value = 100.0 * min(max(coverage, 0.0), 1.0)
    if world.ir_noise > 0:
        rng = np.random.default_rng((config.rng_seed, step, index))
        value += rng.uniform(-world.ir_noise, world.ir_noise)
    return int(round(min(max(value, 0.0), 100.0)))
