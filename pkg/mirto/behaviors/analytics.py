"""Small analytics over pin levels, IR logs, exploration phases and recorded traces."""
import functools
import operator
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from mirto.behaviors.explore import FORWARD, ROTATE, Phase
from mirto.behaviors.linefollow import IR_THRESHOLD
from mirto.client import HIGH

DEFAULT_LAP_RADIUS = 0.06


def count_high_pins(levels: Iterable[int]) -> int:
    return len(list(filter(lambda level: level == HIGH, levels)))


def count_high_pins_fold(levels: Iterable[int]) -> int:
    return functools.reduce(operator.add, filter(lambda level: level == HIGH, levels), 0)


def sum_ir_greater_than(threshold: float, log: Sequence[float]):
    # right fold, as the log is built newest-last
    return functools.reduce(lambda acc, value: value + acc if value > threshold else acc, reversed(log), 0)


def count_right_turns(phases: Iterable[Phase]) -> int:
    return sum(1 for p in phases if p.name == ROTATE and p.side == "right")


def longest_straight(phases: Iterable[Phase], tick_seconds: float = 0.02) -> float:
    return max((p.seconds(tick_seconds) for p in phases if p.name == FORWARD), default=0.0)


def straights_longer_than(phases: Iterable[Phase], seconds: float, tick_seconds: float = 0.02) -> list[Phase]:
    return [p for p in phases if p.name == FORWARD and p.seconds(tick_seconds) > seconds]


# ---------------------------------------------------------------------------
# Trace statistics
# ---------------------------------------------------------------------------
def trace_sum_ir(trace: pd.DataFrame, threshold: float = IR_THRESHOLD, column: str = "ir1") -> int:
    return int(sum_ir_greater_than(threshold, trace[column].astype(int).tolist()))


def trace_count_high(trace: pd.DataFrame, threshold: float) -> int:
    """Control ticks whose |correction| exceeds `threshold`; ticks without one never count."""
    corrections = pd.to_numeric(trace["corr"], errors="coerce")
    return count_high_pins((corrections.abs() > threshold).astype(int))


def trace_lap_time(trace: pd.DataFrame, radius: float = DEFAULT_LAP_RADIUS) -> int | None:
    """Elapsed ms until the robot first comes back within `radius` of where it started."""
    poses = trace[["t_ms", "x", "y"]].dropna()
    if poses.empty:
        return None
    x0, y0 = poses["x"].iloc[0], poses["y"].iloc[0]
    distance = np.hypot(poses["x"] - x0, poses["y"] - y0)
    left = (distance > radius).cummax()
    back = left & (distance <= radius)
    if not back.any():
        return None
    t0 = int(poses["t_ms"].iloc[0])
    return int(poses.loc[back.idxmax(), "t_ms"]) - t0


def lateral_deviation(trace: pd.DataFrame, world) -> np.ndarray:
    """Distance of each recorded pose from the track's centre line."""
    poses = trace[["x", "y"]].dropna()
    return np.array([world.distance_to_track(x, y) for x, y in poses.itertuples(index=False)])
