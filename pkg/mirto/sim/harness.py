"""A client session wired to a lock-step emulator over an in-process loopback link."""
import logging
from contextlib import contextmanager

from mirto.client import ClientSession
from mirto.sim.emulator import Emulator
from mirto.sim.physics import RobotState, SimConfig
from mirto.sim.world import WorldModel
from mirto.transport import loopback_pair

logger = logging.getLogger(__name__)


class SimulatedRobot:
    def __init__(
        self,
        world: WorldModel,
        config: SimConfig | None = None,
        state: RobotState | None = None,
        settle_ms: int = 500,
    ):
        client_side, self._device_side = loopback_pair()
        self.emulator = Emulator(self._device_side, world, config, state).start()
        self.session = ClientSession(
            client_side,
            clock=self.emulator.clock,
            settle_ms=settle_ms,
            pose_probe=self.emulator.pose,
        )

    def close(self) -> None:
        self.session.close()
        self.emulator.stop()
        self._device_side.close()
        if self.emulator.failure is not None:
            logger.error("emulator stopped with %r", self.emulator.failure)

    def __enter__(self) -> "SimulatedRobot":
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()


@contextmanager
def simulated_session(world: WorldModel, config: SimConfig | None = None, warm_up: bool = True, **kwargs):
    """Yield a ready ClientSession driving a simulated robot in `world`."""
    with SimulatedRobot(world, config, **kwargs) as robot:
        if warm_up:
            robot.session.warm_up()
        yield robot.session
