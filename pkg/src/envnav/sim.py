"""Kinematic drone: fixed altitude, constant forward speed, yaw-only steering."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidParams, NotRunning, ValidationError
from .geometry import Pose, WaypointPath, bearing, cross_track_distance, relative_yaw, wrap


class Status(str, enum.Enum):
    RUNNING = "Running"
    COMPLETED = "Completed"
    DIVERGED = "Diverged"
    TIMED_OUT = "TimedOut"


@dataclass(frozen=True)
class SimConfig:
    speed: float = 1.0
    altitude: float = 5.0
    dt: float = 0.25
    max_yaw_rate: float = 1.0
    waypoint_radius: float = 2.0
    max_steps: int = 4000
    divergence_limit: float = 20.0

    def __post_init__(self):
        if not (self.speed > 0 and self.dt > 0 and self.waypoint_radius > 0 and self.altitude > 0):
            raise InvalidParams("speed, dt, altitude and waypoint_radius must be positive")
        if not self.max_yaw_rate > 0:
            raise InvalidParams("max_yaw_rate must be positive")
        if not self.divergence_limit > self.waypoint_radius:
            raise InvalidParams("divergence_limit must exceed waypoint_radius")
        if self.max_steps < 0:
            raise InvalidParams("max_steps must be >= 0")

    @property
    def step_length(self) -> float:
        return self.speed * self.dt

    @property
    def max_turn(self) -> float:
        return self.max_yaw_rate * self.dt


@dataclass(frozen=True)
class SimState:
    pose: Pose
    next_waypoint_index: int = 1
    step_count: int = 0
    status: Status = Status.RUNNING


def initial_state(path: WaypointPath, start: Pose, config: SimConfig) -> SimState:
    if cross_track_distance(path, start.xy) > config.divergence_limit:
        raise ValidationError("start pose is beyond the divergence limit of the path")
    if start.z != config.altitude:
        start = replace(start, z=config.altitude)
    status = Status.TIMED_OUT if config.max_steps == 0 else Status.RUNNING
    return SimState(start, 1, 0, status)


def start_pose(path: WaypointPath, config: SimConfig, offset=(0.0, 0.0), yaw_offset: float = 0.0) -> Pose:
    """Pose at the first waypoint, facing along the first segment, optionally offset."""
    w = path.waypoints
    return Pose(float(w[0, 0] + offset[0]), float(w[0, 1] + offset[1]), config.altitude,
                bearing(w[0], w[1]) + yaw_offset)


def _final_reached(pose: Pose, path: WaypointPath, radius: float) -> bool:
    a, b = path.waypoints[-2], path.waypoints[-1]
    px, py = pose.x - b[0], pose.y - b[1]
    if math.hypot(px, py) > radius:
        return False
    # passed the final waypoint along the last segment's direction
    return px * (b[0] - a[0]) + py * (b[1] - a[1]) >= 0.0


def step(state: SimState, yaw_command: float, config: SimConfig, path: WaypointPath,
         yaw_offset: float = 0.0, shift=(0.0, 0.0)) -> SimState:
    """Advance one tick: clip the turn, rotate, move along the new heading.

    ``yaw_offset`` is added to the heading after the clipped turn and ``shift``
    is added to the position after translation; both are zero for clean
    flights and are used by the noise injectors.
    """
    if state.status != Status.RUNNING:
        raise NotRunning(f"cannot step a rollout in state {state.status.value}")
    if not math.isfinite(yaw_command):
        raise ValidationError("yaw command must be finite")
    turn = min(config.max_turn, max(-config.max_turn, yaw_command))
    yaw = wrap(state.pose.yaw + turn + yaw_offset)
    d = config.step_length
    x = state.pose.x + d * math.sin(yaw) + shift[0]
    y = state.pose.y + d * math.cos(yaw) + shift[1]
    pose = Pose(x, y, state.pose.z, yaw)

    w = path.waypoints
    last = len(w) - 1
    idx = state.next_waypoint_index
    r = config.waypoint_radius
    if idx < last:
        # any upcoming waypoint (not only the current target) inside the radius counts as passed
        inside = np.flatnonzero(np.hypot(w[idx:last, 0] - x, w[idx:last, 1] - y) <= r)
        if len(inside):
            idx += int(inside[-1]) + 1
    count = state.step_count + 1
    status = Status.RUNNING
    if idx == last and _final_reached(pose, path, r):
        status, idx = Status.COMPLETED, len(w)
    elif cross_track_distance(path, (x, y)) > config.divergence_limit:
        status = Status.DIVERGED
    elif count >= config.max_steps:
        status = Status.TIMED_OUT
    return SimState(pose, idx, count, status)


def oracle_command(state: SimState, path: WaypointPath) -> float:
    """Turn toward the next waypoint; the expert used for labels."""
    if state.status != Status.RUNNING:
        raise NotRunning(f"no oracle command in state {state.status.value}")
    return relative_yaw(state.pose, path.waypoints[state.next_waypoint_index])


# controller(state, frame_history) -> yaw command
Controller = Callable[[SimState, Sequence[np.ndarray]], float]
# noise(step_index) -> (position offset (dx, dy), yaw offset)
NoiseFn = Callable[[int], tuple]


def oracle_controller(path: WaypointPath) -> Controller:
    return lambda state, frames: oracle_command(state, path)


def zero_controller(state: SimState, frames) -> float:
    return 0.0


@dataclass
class RolloutTrace:
    dt: float
    poses: list = field(default_factory=list)
    commands: list = field(default_factory=list)
    next_wp: list = field(default_factory=list)
    frames: list = field(default_factory=list)
    offsets: list = field(default_factory=list)
    status: Status = Status.RUNNING
    error: Optional[str] = None

    @property
    def steps(self) -> int:
        return len(self.commands)

    def positions(self) -> np.ndarray:
        return np.array([p.xy for p in self.poses], dtype=float)

    def times(self) -> np.ndarray:
        return np.arange(len(self.poses)) * self.dt

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["step", "t", "x", "y", "z", "yaw", "command", "next_wp", "status"])
        n = len(self.poses)
        for k, p in enumerate(self.poses):
            final = k == n - 1
            cmd = "" if k >= len(self.commands) else repr(float(self.commands[k]))
            st = self.status.value if final else Status.RUNNING.value
            wr.writerow([k, repr(k * self.dt), repr(p.x), repr(p.y), repr(p.z), repr(p.yaw), cmd,
                         self.next_wp[k], st])
        return buf.getvalue()

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def rollout(path: WaypointPath, controller: Controller, world, config: SimConfig, start: Pose,
            camera=None, noise: Optional[NoiseFn] = None, keep_frames: bool = True) -> RolloutTrace:
    """Closed loop: render, ask the controller, step, until a terminal status.

    ``world=None`` skips rendering (the controller then sees no frames).  With
    ``noise`` the drone's pose at step k is its nominal pose plus the k-th
    position and yaw offsets; offsets do not accumulate, so the flight stays
    inside a tube around the noise-free one.
    """
    from .world import CameraSpec, render

    camera = camera or CameraSpec()
    current = noise(0) if noise else ((0.0, 0.0), 0.0)
    if noise:
        start = replace(start, x=start.x + current[0][0], y=start.y + current[0][1], yaw=start.yaw + current[1])
    state = initial_state(path, start, config)
    trace = RolloutTrace(config.dt)
    trace.poses.append(state.pose)
    trace.next_wp.append(state.next_waypoint_index)
    history: list = []
    while state.status == Status.RUNNING:
        k = state.step_count
        if world is not None:
            history.append(render(world, state.pose, camera))
        yaw_offset, shift = 0.0, (0.0, 0.0)
        if noise:
            trace.offsets.append(current)
            nxt = noise(k + 1)
            yaw_offset = nxt[1] - current[1]
            shift = (nxt[0][0] - current[0][0], nxt[0][1] - current[0][1])
            current = nxt
        try:
            cmd = float(controller(state, history))
        except Exception as e:  # recorded, then re-raised for the caller
            trace.error = f"{type(e).__name__}: {e}"
            raise
        state = step(state, cmd, config, path, yaw_offset=yaw_offset, shift=shift)
        trace.commands.append(cmd)
        trace.poses.append(state.pose)
        trace.next_wp.append(state.next_waypoint_index)
    trace.status = state.status
    trace.frames = history if keep_frames else []
    return trace
