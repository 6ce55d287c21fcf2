from mirto.sim.clock import SimClock, WallClock, virtual_sleep
from mirto.sim.emulator import Emulator, run_emulator
from mirto.sim.physics import RobotState, SimConfig, sample_ir, step_sim
from mirto.sim.world import WorldModel, load_world, parse_world

__all__ = [
    "Emulator",
    "RobotState",
    "SimClock",
    "SimConfig",
    "WallClock",
    "WorldModel",
    "load_world",
    "parse_world",
    "run_emulator",
    "sample_ir",
    "step_sim",
    "virtual_sleep",
]
