"""Poses, waypoint paths and the path-tracking metrics.

Angles follow one fixed convention everywhere in the package: a bearing is
measured from the +y axis and is positive clockwise, i.e.
``bearing = atan2(dx, dy)``.  All angles are wrapped to (-pi, pi].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateTarget, EmptyTrajectory, InvalidPath, ValidationError

TAU = 2.0 * math.pi
_MIN_SEPARATION = 1e-9


def wrap(theta: float) -> float:
    """Wrap an angle to (-pi, pi]; -pi maps to +pi."""
    r = math.remainder(theta, TAU)
    if r <= -math.pi:
        r += TAU
    return r


def wrap_array(theta):
    r = np.remainder(np.asarray(theta, dtype=float) + math.pi, TAU) - math.pi
    return np.where(r <= -math.pi, r + TAU, r)


def bearing(src, dst) -> float:
    return math.atan2(dst[0] - src[0], dst[1] - src[1])


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    z: float = 5.0
    yaw: float = 0.0

    def __post_init__(self):
        if not self.z > 0:
            raise ValidationError(f"pose altitude must be positive, got {self.z}")
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "yaw", wrap(float(self.yaw)))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class WaypointPath:
    id: str
    waypoints: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.array(self.waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidPath(f"waypoints must be a list of [x, y] pairs, got shape {pts.shape}")
        if len(pts) < 2:
            raise InvalidPath("a path needs at least 2 waypoints")
        if not np.all(np.isfinite(pts)):
            raise InvalidPath("waypoints must be finite")
        seg = np.hypot(*np.diff(pts, axis=0).T)
        if np.any(seg <= _MIN_SEPARATION):
            k = int(np.argmin(seg))
            raise InvalidPath(f"waypoints {k} and {k + 1} coincide")
        pts.setflags(write=False)
        object.__setattr__(self, "waypoints", pts)

    def __len__(self):
        return len(self.waypoints)

    def segment_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.waypoints, axis=0).T)

    def segment_bearings(self) -> np.ndarray:
        d = np.diff(self.waypoints, axis=0)
        return np.arctan2(d[:, 0], d[:, 1])

    def to_json(self) -> str:
        doc = {"id": self.id, "waypoints": [[float(x), float(y)] for x, y in self.waypoints]}
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "WaypointPath":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvalidPath(f"path file is not valid JSON: {e}") from None
        if not isinstance(doc, dict) or set(doc) != {"id", "waypoints"}:
            raise InvalidPath('path document must have exactly the keys "id" and "waypoints"')
        if not isinstance(doc["id"], str):
            raise InvalidPath("path id must be a string")
        return cls(doc["id"], doc["waypoints"])

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WaypointPath":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def relative_yaw(pose: Pose, target) -> float:
    """Signed turn (radians) that would point ``pose`` straight at ``target``."""
    dx = target[0] - pose.x
    dy = target[1] - pose.y
    if math.hypot(dx, dy) <= _MIN_SEPARATION:
        raise DegenerateTarget(f"target {tuple(target)} coincides with pose position")
    return wrap(math.atan2(dx, dy) - pose.yaw)


def path_distance(path: WaypointPath) -> float:
    return float(np.sum(path.segment_lengths()))


def sum_angle_change(path: WaypointPath) -> float:
    b = path.segment_bearings()
    if len(b) < 2:
        return 0.0
    return float(np.sum(np.abs(wrap_array(np.diff(b)))))


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 2)
    return pts[:, :2]


def mean_waypoint_min_distance(path: WaypointPath, trajectory) -> float:
    traj = _as_points(trajectory)
    if len(traj) == 0:
        raise EmptyTrajectory("trajectory has no points")
    w = path.waypoints
    d = np.hypot(w[:, None, 0] - traj[None, :, 0], w[:, None, 1] - traj[None, :, 1])
    return float(np.mean(d.min(axis=1)))


def point_segment_distance(p, a, b) -> float:
    ax, ay = a
    abx, aby = b[0] - ax, b[1] - ay
    apx, apy = p[0] - ax, p[1] - ay
    t = (apx * abx + apy * aby) / (abx * abx + aby * aby)
    t = min(1.0, max(0.0, t))
    return math.hypot(apx - t * abx, apy - t * aby)


def nearest_two(path: WaypointPath, position) -> tuple[int, int]:
    """Indices of the two waypoints closest to ``position``; lower index wins ties."""
    w = path.waypoints
    d = np.hypot(w[:, 0] - position[0], w[:, 1] - position[1])
    order = np.argsort(d, kind="stable")
    return int(order[0]), int(order[1])


def cross_track_distance(path: WaypointPath, position) -> float:
    i, j = nearest_two(path, position)
    w = path.waypoints
    return point_segment_distance(position, w[i], w[j])


def mean_cross_track_distance(path: WaypointPath, trajectory) -> float:
    traj = _as_points(trajectory)
    if len(traj) == 0:
        raise EmptyTrajectory("trajectory has no points")
    return float(np.mean([cross_track_distance(path, p) for p in traj]))


def rotate_points(points: Iterable[Sequence[float]], theta: float, center=(0.0, 0.0)) -> np.ndarray:
    """Rotate points about ``center`` so that every bearing increases by ``theta``."""
    pts = np.asarray(points, dtype=float) - center
    c, s = math.cos(theta), math.sin(theta)
    # clockwise rotation in the (x, y) plane
    x = pts[..., 0] * c + pts[..., 1] * s
    y = -pts[..., 0] * s + pts[..., 1] * c
    return np.stack([x, y], axis=-1) + center
