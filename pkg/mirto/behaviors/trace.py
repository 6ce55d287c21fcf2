"""Per-tick trace records and their CSV form."""
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import pandas as pd

from mirto.behaviors.common import Robot, read_ir
from mirto.errors import UsageError

TRACE_HEADER = ("t_ms", "pl", "pr", "x", "y", "theta", "ir0", "ir1", "ir2", "bl", "br", "err", "corr")


@dataclass(frozen=True)
class TraceRecord:
    t_ms: int
    power_left: int
    power_right: int
    x: float | None
    y: float | None
    theta: float | None
    ir0: int
    ir1: int
    ir2: int
    bump_left: bool
    bump_right: bool
    error: float | None = None
    correction: int | None = None

    def row(self) -> list[str]:
        return [
            str(self.t_ms),
            str(self.power_left),
            str(self.power_right),
            _real(self.x),
            _real(self.y),
            _real(self.theta),
            str(self.ir0),
            str(self.ir1),
            str(self.ir2),
            str(int(self.bump_left)),
            str(int(self.bump_right)),
            _real(self.error),
            "" if self.correction is None else str(self.correction),
        ]


def _real(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def snapshot(
    robot: Robot,
    powers: tuple[int, int],
    error: float | None = None,
    correction: int | None = None,
) -> TraceRecord:
    """Record what the robot senses right now together with the command just applied."""
    ir0, ir1, ir2 = read_ir(robot)
    x, y, theta = robot.pose() or (None, None, None)
    return TraceRecord(
        t_ms=robot.now_ms(),
        power_left=powers[0],
        power_right=powers[1],
        x=x,
        y=y,
        theta=theta,
        ir0=ir0,
        ir1=ir1,
        ir2=ir2,
        bump_left=robot.left_bump(),
        bump_right=robot.right_bump(),
        error=error,
        correction=correction,
    )


def write_trace(path: str | Path, records: Iterable[TraceRecord]) -> int:
    records = list(records)
    for before, after in zip(records, records[1:]):
        if after.t_ms <= before.t_ms:
            raise UsageError(f"trace times must increase strictly: {before.t_ms} then {after.t_ms}")
    with open(path, "w", newline="", encoding="ascii") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        writer.writerows(r.row() for r in records)
    return len(records)


def read_trace(path: str | Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise UsageError(f"cannot read trace {path}: {e}") from e
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=list(TRACE_HEADER))
    missing = [c for c in TRACE_HEADER if c not in frame.columns]
    if missing:
        raise UsageError(f"trace {path} lacks columns {missing}")
    return frame
