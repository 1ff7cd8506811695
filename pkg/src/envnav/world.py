"""Synthetic blocks world and a pinhole raycasting camera."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidParams
from .geometry import Pose, point_segment_distance


@dataclass(frozen=True)
class WorldParams:
    block_count: int = 160
    area_extent: float = 120.0  # blocks live in [-area_extent, area_extent]^2
    size_range: tuple[float, float] = (2.0, 8.0)
    height_range: tuple[float, float] = (2.0, 14.0)
    shade_range: tuple[float, float] = (0.05, 0.95)
    ground_shade: float = 0.35
    sky_shade: float = 0.9
    # blocks are kept at least this far from the keep-out path, if one is given
    clearance: float = 3.0

    def __post_init__(self):
        if self.block_count < 0:
            raise InvalidParams("block_count must be >= 0")
        if not self.area_extent > 0:
            raise InvalidParams("area_extent must be positive")
        for name in ("size_range", "height_range", "shade_range"):
            lo, hi = map(float, getattr(self, name))
            object.__setattr__(self, name, (lo, hi))
            if not 0 < lo <= hi:
                raise InvalidParams(f"{name} must satisfy 0 < lo <= hi")
        if self.shade_range[1] > 1:
            raise InvalidParams("shade_range must lie within [0, 1]")
        for name in ("ground_shade", "sky_shade"):
            if not 0 <= getattr(self, name) <= 1:
                raise InvalidParams(f"{name} must lie in [0, 1]")
        if self.clearance < 0:
            raise InvalidParams("clearance must be >= 0")


@dataclass(frozen=True)
class Block:
    center: tuple[float, float, float]
    size: tuple[float, float, float]
    shade: float


@dataclass(frozen=True)
class BlockWorld:
    seed: int
    params: WorldParams
    blocks: tuple[Block, ...] = field(repr=False)

    @property
    def ground_shade(self) -> float:
        return self.params.ground_shade

    @property
    def sky_shade(self) -> float:
        return self.params.sky_shade

    def contains(self, xy) -> bool:
        e = self.params.area_extent
        return abs(xy[0]) <= e and abs(xy[1]) <= e

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "params": asdict(self.params),
            "blocks": [asdict(b) for b in self.blocks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "BlockWorld":
        params = WorldParams(**{k: tuple(v) if isinstance(v, list) else v for k, v in doc["params"].items()})
        blocks = []
        for b in doc["blocks"]:
            if min(b["size"]) <= 0:
                raise InvalidParams("block sizes must be strictly positive")
            blocks.append(Block(tuple(b["center"]), tuple(b["size"]), float(b["shade"])))
        return cls(int(doc["seed"]), params, tuple(blocks))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "BlockWorld":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def box_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(lo, hi, shade) arrays, shapes (B, 3), (B, 3), (B,)."""
        if not self.blocks:
            return np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0)
        c = np.array([b.center for b in self.blocks], dtype=float)
        s = np.array([b.size for b in self.blocks], dtype=float)
        shade = np.array([b.shade for b in self.blocks], dtype=float)
        return c - s / 2, c + s / 2, shade


def _f32(x: float) -> float:
    # shades are stored float32-exact so frames serialize losslessly
    return float(np.float32(x))


def generate_world(seed: int, params: WorldParams | None = None, keepout=None) -> BlockWorld:
    """Place ``block_count`` boxes uniformly in the square area.

    Randomness comes from numpy's Philox generator keyed by ``seed``.  With a
    ``keepout`` polyline (an (N, 2) array, typically the flight path) any
    candidate whose footprint comes within ``params.clearance`` of it is
    redrawn, so flights between waypoints stay obstacle-free.
    """
    params = params or WorldParams()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0x3D])))
    keep = None if keepout is None else np.asarray(keepout, dtype=float)
    e = params.area_extent
    blocks = []
    attempts = 0
    while len(blocks) < params.block_count:
        attempts += 1
        if attempts > 1000 * max(params.block_count, 1):
            raise InvalidParams("could not place blocks outside the keep-out corridor")
        cx, cy = rng.uniform(-e, e, size=2)
        sx, sy = rng.uniform(*params.size_range, size=2)
        h = rng.uniform(*params.height_range)
        shade = rng.uniform(*params.shade_range)
        if keep is not None:
            radius = 0.5 * math.hypot(sx, sy) + params.clearance
            if len(keep) == 1:
                near = math.hypot(cx - keep[0, 0], cy - keep[0, 1]) < radius
            else:
                near = any(point_segment_distance((cx, cy), keep[k], keep[k + 1]) < radius
                           for k in range(len(keep) - 1))
            if near:
                continue
        blocks.append(Block((float(cx), float(cy), float(h / 2)), (float(sx), float(sy), float(h)), _f32(shade)))
    return BlockWorld(int(seed), params, tuple(blocks))


@dataclass(frozen=True)
class CameraSpec:
    width: int = 64
    height: int = 36
    horizontal_fov: float = math.pi / 2
    channels: int = 1

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise InvalidParams("camera width and height must be >= 8")
        if self.width * 9 != self.height * 16:
            raise InvalidParams("camera must keep the 16:9 aspect ratio")
        if not 0 < self.horizontal_fov < math.pi:
            raise InvalidParams("horizontal_fov must lie in (0, pi)")
        if self.channels not in (1, 3):
            raise InvalidParams("channels must be 1 or 3")

    @property
    def shape(self) -> tuple[int, ...]:
        if self.channels == 1:
            return (self.height, self.width)
        return (self.height, self.width, self.channels)

    def focal_scale(self) -> float:
        """tan(hfov/2) / (width/2): image-plane units per pixel at unit depth."""
        return math.tan(self.horizontal_fov / 2) / (self.width / 2)

    def horizon_row(self, pitch: float = 0.0) -> float:
        """Image row (fractional, pixel-edge coordinates) where rays turn downward."""
        return self.height / 2 + math.tan(pitch) / self.focal_scale()

    def pixel_offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """Right (u) and up (v) image-plane offsets of every pixel center, row-major."""
        k = self.focal_scale()
        j = np.arange(self.width) + 0.5 - self.width / 2
        i = self.height / 2 - (np.arange(self.height) + 0.5)
        u, v = np.meshgrid(j * k, i * k)
        return u.ravel(), v.ravel()


_MAX_CELLS = 1 << 21


def ray_directions(pose: Pose, camera: CameraSpec) -> np.ndarray:
    """Unnormalised ray direction through every pixel center, row-major (N, 3)."""
    u, v = camera.pixel_offsets()
    s, c = math.sin(pose.yaw), math.cos(pose.yaw)
    # forward = (sin, cos, 0), right = (cos, -sin, 0), up = (0, 0, 1)
    return np.stack([s + u * c, c - u * s, v], axis=1)


def _slab(lo, hi, origin, direction):
    """Entry/exit ray parameters of each slab, broadcasting ``direction`` against the slabs."""
    d = np.where(direction == 0.0, 1e-300, direction)
    t1 = (lo - origin) / d
    t2 = (hi - origin) / d
    return np.minimum(t1, t2), np.maximum(t1, t2)


def render(world: BlockWorld, pose: Pose, camera: CameraSpec | None = None) -> np.ndarray:
    """Render the forward view as float32 grayscale in [0, 1], shape ``camera.shape``.

    Each pixel takes the shade of the nearest block its ray hits, else the
    ground shade if the ray points down, else the sky shade.  The horizontal
    ray components depend only on the column and the vertical component only
    on the row, so the box slab tests are done per column and per row and
    combined.
    """
    camera = camera or CameraSpec()
    H, W = camera.height, camera.width
    k = camera.focal_scale()
    u = (np.arange(W) + 0.5 - W / 2) * k
    v = (H / 2 - (np.arange(H) + 0.5)) * k
    s, c = math.sin(pose.yaw), math.cos(pose.yaw)
    dx = s + u * c
    dy = c - u * s

    t_ground = np.where(v < 0, -pose.z / np.where(v < 0, v, -1.0), np.inf)
    out = np.broadcast_to(np.where(np.isfinite(t_ground), world.ground_shade, world.sky_shade)[:, None], (H, W)).copy()

    lo, hi, shade = world.box_arrays()
    if len(shade):
        xn, xf = _slab(lo[None, :, 0], hi[None, :, 0], pose.x, dx[:, None])
        yn, yf = _slab(lo[None, :, 1], hi[None, :, 1], pose.y, dy[:, None])
        near_xy = np.maximum(np.maximum(xn, yn), 0.0)
        far_xy = np.minimum(xf, yf)
        # columns x blocks; keep only blocks some column ray passes through
        keep = np.any(far_xy >= near_xy, axis=0)
        if np.any(keep):
            near_xy, far_xy = near_xy[:, keep], far_xy[:, keep]
            zn, zf = _slab(lo[None, keep, 2], hi[None, keep, 2], pose.z, v[:, None])
            shade_k = shade[keep]
            rows = max(1, _MAX_CELLS // (W * len(shade_k)))
            for r0 in range(0, H, rows):
                r = slice(r0, min(H, r0 + rows))
                tn = np.maximum(near_xy[None, :, :], zn[r, None, :])
                tf = np.minimum(far_xy[None, :, :], zf[r, None, :])
                t_hit = np.where(tf >= tn, tn, np.inf)
                idx = np.argmin(t_hit, axis=2)
                best = np.take_along_axis(t_hit, idx[:, :, None], axis=2)[:, :, 0]
                visible = best < t_ground[r, None]
                out[r] = np.where(visible, shade_k[idx], out[r])

    frame = out.astype(np.float32)
    if camera.channels == 3:
        frame = np.repeat(frame[:, :, None], 3, axis=2)
    return frame


def rotate_world(world: BlockWorld, theta: float, center) -> BlockWorld:
    """Rotate block centers about ``center`` by a bearing increment ``theta``.

    Boxes stay axis-aligned, so this is only a true rotation when ``theta`` is
    a multiple of pi/2 (sizes are swapped for odd quarter turns).
    """
    from .geometry import rotate_points

    quarter = round(theta / (math.pi / 2)) % 2 == 1
    blocks = []
    for b in world.blocks:
        x, y = rotate_points([b.center[:2]], theta, center)[0]
        sx, sy, sz = b.size
        if quarter:
            sx, sy = sy, sx
        blocks.append(Block((float(x), float(y), b.center[2]), (sx, sy, sz), b.shade))
    return BlockWorld(world.seed, world.params, tuple(blocks))
