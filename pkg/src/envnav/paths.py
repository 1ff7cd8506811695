"""Canonical test paths of increasing difficulty."""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParams
from .geometry import WaypointPath

KINDS = ("straight", "L", "zigzag", "loop")


def _densify(corners, spacing: float | None) -> np.ndarray:
    """Insert evenly spaced intermediate waypoints along each leg."""
    corners = np.asarray(corners, dtype=float)
    if not spacing:
        return corners
    pts = [corners[0]]
    for a, b in zip(corners[:-1], corners[1:]):
        n = max(1, int(math.ceil(np.hypot(*(b - a)) / spacing - 1e-9)))
        for k in range(1, n + 1):
            pts.append(a + (b - a) * k / n)
    return np.array(pts)


def make_path(kind: str, *, length: float = 100.0, waypoints: int | None = None, leg: float = 20.0,
              segment: float = 37.5, turns: int = 3, spacing: float | None = 7.5,
              radius: float = 20.0, origin=(0.0, 0.0), path_id: str | None = None) -> WaypointPath:
    """Build a path of the given ``kind``.

    straight: ``waypoints`` evenly spaced over ``length`` heading +y.
    L:        two legs of ``leg`` meters with one right-angle turn.
    zigzag:   staircase of ``turns`` alternating right-angle turns between
              legs of ``segment`` meters; angle change is turns * pi/2.
    loop:     ``waypoints`` points on a circle of ``radius``, open at the start.
    """
    ox, oy = origin
    if waypoints is None:
        waypoints = 16 if kind == "loop" else 5
    if kind == "straight":
        if waypoints < 2 or length <= 0:
            raise InvalidParams("straight needs waypoints >= 2 and length > 0")
        y = np.linspace(0.0, length, waypoints)
        pts = np.stack([np.zeros_like(y), y], axis=1)
    elif kind == "L":
        if leg <= 0:
            raise InvalidParams("L needs leg > 0")
        pts = _densify([(0, 0), (0, leg), (leg, leg)], spacing)
    elif kind == "zigzag":
        if turns < 1 or segment <= 0:
            raise InvalidParams("zigzag needs turns >= 1 and segment > 0")
        corners = [(0.0, 0.0)]
        x = y = 0.0
        for k in range(turns + 1):
            if k % 2 == 0:
                y += segment
            else:
                x += segment
            corners.append((x, y))
        pts = _densify(corners, spacing)
    elif kind == "loop":
        if waypoints < 4 or radius <= 0:
            raise InvalidParams("loop needs waypoints >= 4 and radius > 0")
        # starts at the origin heading +y and turns clockwise; stops one step short of closing
        a = np.arange(waypoints) * (2 * math.pi / waypoints)
        pts = np.stack([radius * (1 - np.cos(a)), radius * np.sin(a)], axis=1)
    else:
        raise InvalidParams(f"unknown path kind {kind!r}; expected one of {KINDS}")
    pts = pts + [ox, oy]
    return WaypointPath(path_id or kind, pts)


def min_nonadjacent_clearance(waypoints) -> float:
    """Smallest distance from a waypoint to a path segment that does not touch it."""
    from .geometry import point_segment_distance

    w = np.asarray(waypoints, float)
    best = math.inf
    for j in range(len(w)):
        for i in range(len(w) - 1):
            if i in (j - 1, j):
                continue
            best = min(best, point_segment_distance(w[j], w[i], w[i + 1]))
    return best


def random_feasible_path(rng: np.random.Generator, *, segments=(2, 7), segment_length=(6.0, 30.0),
                         max_turn: float = 2 * math.pi / 3, clearance: float = 5.0,
                         path_id: str = "random") -> WaypointPath:
    """Random polyline the oracle can always fly with the default sim settings.

    Turns are limited to ``max_turn`` and legs are long compared with the
    1 m turning radius (speed / max_yaw_rate) and the 2 m capture radius.
    Draws are repeated until no waypoint comes within ``clearance`` of a
    segment it does not belong to; otherwise a path that doubles back could
    capture a later waypoint early and cut the loop short.
    """
    while True:
        n = int(rng.integers(segments[0], segments[1] + 1))
        heading = rng.uniform(-math.pi, math.pi)
        pts = [np.zeros(2)]
        for k in range(n):
            if k:
                heading += rng.uniform(-max_turn, max_turn)
            length = rng.uniform(*segment_length)
            pts.append(pts[-1] + length * np.array([math.sin(heading), math.cos(heading)]))
        if min_nonadjacent_clearance(pts) > clearance:
            return WaypointPath(path_id, np.array(pts))
