"""World geometry: a line track to follow and wall segments to bump into.

World files hold one item per line:

    track <width> x1 y1 x2 y2 ...
    obstacle x1 y1 x2 y2
    start x y theta
    ir-noise <amplitude>
    # comment
"""
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from mirto.errors import UsageError

Point = tuple[float, float]
Segment = tuple[float, float, float, float]


@dataclass(frozen=True)
class WorldModel:
    track: tuple[Point, ...]
    track_width: float
    obstacles: tuple[Segment, ...] = ()
    start: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ir_noise: float = 0.0
    name: str = ""

    def __post_init__(self):
        if len(self.track) < 2:
            raise UsageError("track needs at least two points")
        if not self.track_width > 0:
            raise UsageError(f"track width must be positive, got {self.track_width}")
        if not 0 <= self.ir_noise <= 100:
            raise UsageError(f"ir-noise must be in [0, 100], got {self.ir_noise}")

    @cached_property
    def _track_segments(self) -> tuple[np.ndarray, np.ndarray]:
        points = np.asarray(self.track, dtype=float)
        return points[:-1], points[1:]

    @cached_property
    def _obstacle_segments(self) -> tuple[np.ndarray, np.ndarray]:
        segments = np.asarray(self.obstacles, dtype=float).reshape(-1, 4)
        return segments[:, :2], segments[:, 2:]

    def distance_to_track(self, x: float, y: float) -> float:
        a, b = self._track_segments
        distances, _, _ = _segment_distances(x, y, a, b)
        return float(distances.min())

    def clearance(self, x: float, y: float) -> float:
        """Distance from (x, y) to the nearest obstacle segment (inf without obstacles)."""
        if not self.obstacles:
            return math.inf
        a, b = self._obstacle_segments
        distances, _, _ = _segment_distances(x, y, a, b)
        return float(distances.min())

    def contacts(self, x: float, y: float, reach: float) -> list[Point]:
        """Closest points of every obstacle segment within `reach` of (x, y)."""
        if not self.obstacles:
            return []
        a, b = self._obstacle_segments
        distances, qx, qy = _segment_distances(x, y, a, b)
        near = distances <= reach
        return list(zip(qx[near].tolist(), qy[near].tolist()))

    def crosses_obstacle(self, x0: float, y0: float, x1: float, y1: float) -> bool:
        if not self.obstacles or (x0 == x1 and y0 == y1):
            return False
        a, b = self._obstacle_segments
        p, q = np.array([x0, y0]), np.array([x1, y1])
        d1 = _orientation(a, b, p)
        d2 = _orientation(a, b, q)
        d3 = _orientation(p, q, a)
        d4 = _orientation(p, q, b)
        return bool(np.any((d1 * d2 < 0) & (d3 * d4 < 0)))


def _segment_distances(px: float, py: float, a: np.ndarray, b: np.ndarray):
    d = b - a
    length2 = (d * d).sum(axis=1)
    t = ((px - a[:, 0]) * d[:, 0] + (py - a[:, 1]) * d[:, 1]) / np.where(length2 > 0, length2, 1.0)
    t = np.clip(t, 0.0, 1.0)
    qx = a[:, 0] + t * d[:, 0]
    qy = a[:, 1] + t * d[:, 1]
    return np.hypot(px - qx, py - qy), qx, qy


def _orientation(a, b, c):
    a, b, c = np.atleast_2d(a), np.atleast_2d(b), np.atleast_2d(c)
    return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])


# ---------------------------------------------------------------------------
# World files
# ---------------------------------------------------------------------------
def parse_world(text: str, name: str = "<world>") -> WorldModel:
    track: list[Point] | None = None
    width = 0.0
    obstacles: list[Segment] = []
    start = (0.0, 0.0, 0.0)
    noise = 0.0

    for number, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        keyword, args = tokens[0], tokens[1:]
        where = f"{name}:{number}"
        try:
            values = [float(a) for a in args]
        except ValueError:
            raise UsageError(f"{where}: non-numeric argument in {raw.strip()!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise UsageError(f"{where}: non-finite number")

        if keyword == "track":
            if track is not None:
                raise UsageError(f"{where}: only one track per world")
            if len(values) < 5 or len(values) % 2 != 1:
                raise UsageError(f"{where}: expected 'track <width> x1 y1 x2 y2 ...'")
            width = values[0]
            track = list(zip(values[1::2], values[2::2]))
        elif keyword == "obstacle":
            if len(values) != 4:
                raise UsageError(f"{where}: expected 'obstacle x1 y1 x2 y2'")
            obstacles.append(tuple(values))
        elif keyword == "start":
            if len(values) != 3:
                raise UsageError(f"{where}: expected 'start x y theta'")
            start = tuple(values)
        elif keyword == "ir-noise":
            if len(values) != 1:
                raise UsageError(f"{where}: expected 'ir-noise <amplitude>'")
            noise = values[0]
        else:
            raise UsageError(f"{where}: unknown item {keyword!r}")

    if track is None:
        raise UsageError(f"{name}: no track defined")
    return WorldModel(tuple(track), width, tuple(obstacles), start, noise, name)


def load_world(path: str | Path) -> WorldModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read world file {path}: {e}") from e
    return parse_world(text, name=path.stem)
