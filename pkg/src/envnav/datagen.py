"""Navigation-envelope data generation.

Each auxiliary flight is an oracle-controlled rollout with per-step position
and heading noise.  Every recorded step yields one rendered frame and the
clean oracle command from the (noisy) pose as its label.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import InvalidParams, MissingFile, ValidationError, WorldPathMismatch
from .geometry import WaypointPath, relative_yaw
from .sim import RolloutTrace, SimConfig, Status, oracle_controller, rollout, start_pose
from .world import BlockWorld, CameraSpec

FORMAT_VERSION = 1
MAX_ATTEMPTS = 20

# domain tags keep the noise streams of different consumers disjoint
STREAM_ENVELOPE = 0x454E56
STREAM_EVAL = 0x4556414C


def step_draws(seed: int, *key: int) -> np.ndarray:
    """Three U[-1, 1) draws for one (seed, key...) tuple.

    Uses numpy's counter-based Philox bit generator keyed through
    SeedSequence, which is bit-reproducible across platforms, so any single
    step's noise can be replayed without generating the ones before it.
    """
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, key)])
    return np.random.Generator(np.random.Philox(ss)).uniform(-1.0, 1.0, size=3)


@dataclass(frozen=True)
class EnvelopeConfig:
    auxiliary_path_count: int = 32
    position_noise: float = 1.0
    yaw_noise: float = 0.1
    seed: int = 0
    # "step": fresh offsets every step; "path": one constant offset for the whole flight
    mode: str = "step"

    def __post_init__(self):
        if self.auxiliary_path_count < 1:
            raise InvalidParams("auxiliary_path_count must be >= 1")
        if self.position_noise < 0 or self.yaw_noise < 0:
            raise InvalidParams("noise magnitudes must be >= 0")
        if self.mode not in ("step", "path"):
            raise InvalidParams("mode must be 'step' or 'path'")


def noise_stream(position_noise: float, yaw_noise: float, seed: int, key: tuple, mode: str = "step"):
    """Return ``noise(k) -> ((dx, dy), dyaw)`` for use with :func:`sim.rollout`."""
    if position_noise == 0 and yaw_noise == 0:
        return None

    def noise(k: int):
        if mode == "path":
            u = step_draws(seed, *key, 0)
            return (float(position_noise * u[0]), float(position_noise * u[1])), float(yaw_noise * u[2])
        u = step_draws(seed, *key, k)
        return (float(position_noise * u[0]), float(position_noise * u[1])), float(yaw_noise * u[2])

    return noise


class Sample(NamedTuple):
    frame_ref: int
    label: float
    path_ordinal: int
    step_ordinal: int


def perturb_rollout(path: WaypointPath, config: EnvelopeConfig, aux_index: int, world: BlockWorld | None,
                    sim_config: SimConfig, camera: CameraSpec | None = None):
    """Fly one auxiliary path; returns ``(trace, samples, attempts)``.

    A flight that does not complete is discarded and re-flown with the next
    substream; ``attempts`` counts the flights made.
    """
    if not 0 <= aux_index < config.auxiliary_path_count:
        raise InvalidParams(f"aux_index {aux_index} outside [0, {config.auxiliary_path_count})")
    start = start_pose(path, sim_config)
    for attempt in range(MAX_ATTEMPTS):
        noise = noise_stream(config.position_noise, config.yaw_noise, config.seed,
                             (STREAM_ENVELOPE, aux_index, attempt), config.mode)
        trace = rollout(path, oracle_controller(path), world, sim_config, start, camera=camera, noise=noise)
        if trace.status == Status.COMPLETED:
            samples = [Sample(k, trace.commands[k], aux_index, k) for k in range(trace.steps)]
            return trace, samples, attempt + 1
    raise ValidationError(f"auxiliary flight {aux_index} failed {MAX_ATTEMPTS} times; noise too large for this path")


@dataclass
class Dataset:
    manifest: dict
    frames: np.ndarray  # (N, H, W) float32
    frame_ref: np.ndarray
    labels: np.ndarray
    path_ordinal: np.ndarray
    step_ordinal: np.ndarray
    traces: list = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.labels)

    @property
    def samples(self) -> list[Sample]:
        return [Sample(int(f), float(l), int(p), int(s)) for f, l, p, s in
                zip(self.frame_ref, self.labels, self.path_ordinal, self.step_ordinal)]

    def validate(self) -> None:
        n = len(self.labels)
        if self.manifest["sample_count"] != n:
            raise ValidationError("manifest sample count does not match samples")
        if n and (self.frame_ref.min() < 0 or self.frame_ref.max() >= len(self.frames)):
            raise ValidationError("frame_ref out of range")
        same = self.path_ordinal[1:] == self.path_ordinal[:-1]
        if np.any(same & (self.step_ordinal[1:] <= self.step_ordinal[:-1])):
            raise ValidationError("step_ordinal must increase within an auxiliary path")

    def samples_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["frame_ref", "label", "path_ordinal", "step_ordinal"])
        for s in self.samples:
            wr.writerow([s.frame_ref, repr(s.label), s.path_ordinal, s.step_ordinal])
        return buf.getvalue()

    def save(self, directory) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "manifest.json").write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")
        (d / "samples.csv").write_text(self.samples_csv())
        (d / "frames.f32").write_bytes(np.ascontiguousarray(self.frames, dtype="<f4").tobytes())
        if self.traces:
            (d / "traces").mkdir(exist_ok=True)
            for i, tr in enumerate(self.traces):
                tr.save_csv(d / "traces" / f"aux_{i:03d}.csv")
        return d

    @classmethod
    def load(cls, directory) -> "Dataset":
        d = Path(directory)
        for name in ("manifest.json", "samples.csv", "frames.f32"):
            if not (d / name).is_file():
                raise MissingFile(f"dataset file not found: {d / name}")
        manifest = json.loads((d / "manifest.json").read_text())
        shape = tuple(manifest["frame_shape"])
        raw = np.frombuffer((d / "frames.f32").read_bytes(), dtype="<f4")
        if raw.size % int(np.prod(shape)):
            raise ValidationError("frame store size does not match frame_shape")
        frames = raw.reshape((-1, *shape)).astype(np.float32)
        with open(d / "samples.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        ds = cls(
            manifest,
            frames,
            np.array([int(r["frame_ref"]) for r in rows], dtype=np.int64),
            np.array([float(r["label"]) for r in rows], dtype=float),
            np.array([int(r["path_ordinal"]) for r in rows], dtype=np.int64),
            np.array([int(r["step_ordinal"]) for r in rows], dtype=np.int64),
        )
        ds.validate()
        return ds


def check_path_in_world(path: WaypointPath, world: BlockWorld) -> None:
    for x, y in path.waypoints:
        if not world.contains((x, y)):
            raise WorldPathMismatch(f"waypoint ({x}, {y}) lies outside the world extent "
                                    f"±{world.params.area_extent}")


def build_dataset(path: WaypointPath, world: BlockWorld, envelope: EnvelopeConfig,
                  camera: CameraSpec | None = None, sim_config: SimConfig | None = None,
                  progress=None) -> Dataset:
    camera = camera or CameraSpec()
    sim_config = sim_config or SimConfig()
    check_path_in_world(path, world)
    frames, refs, labels, paths, steps, traces = [], [], [], [], [], []
    per_path, regenerated = [], 0
    offset = 0
    for aux in range(envelope.auxiliary_path_count):
        trace, samples, attempts = perturb_rollout(path, envelope, aux, world, sim_config, camera)
        regenerated += attempts - 1
        frames.extend(trace.frames)
        for s in samples:
            refs.append(offset + s.frame_ref)
            labels.append(s.label)
            paths.append(s.path_ordinal)
            steps.append(s.step_ordinal)
        offset += len(trace.frames)
        per_path.append(len(samples))
        trace.frames = []
        traces.append(trace)
        if progress:
            progress(aux, len(samples))
    manifest = {
        "format_version": FORMAT_VERSION,
        "path_id": path.id,
        "world_seed": world.seed,
        "camera": asdict(camera),
        "envelope": asdict(envelope),
        "sim": asdict(sim_config),
        "sample_count": len(labels),
        "per_path_counts": per_path,
        "regenerated_flights": regenerated,
        "frame_shape": list(camera.shape),
        "frame_dtype": "<f4",
    }
    ds = Dataset(
        manifest,
        np.stack(frames).astype(np.float32) if frames else np.zeros((0, *camera.shape), np.float32),
        np.array(refs, dtype=np.int64),
        np.array(labels, dtype=float),
        np.array(paths, dtype=np.int64),
        np.array(steps, dtype=np.int64),
        traces,
    )
    ds.validate()
    return ds


def sequence_windows(dataset: Dataset, timesteps: int) -> list[tuple[np.ndarray, float]]:
    """Sliding windows of consecutive samples inside one auxiliary path.

    Each item is ``(frame_refs, label)`` where ``frame_refs`` has length
    ``timesteps`` and ``label`` is the label of the window's last sample.
    """
    if timesteps < 1:
        raise InvalidParams("timesteps must be >= 1")
    out = []
    po = dataset.path_ordinal
    n = len(po)
    start = 0
    while start < n:
        end = start
        while end < n and po[end] == po[start]:
            end += 1
        for i in range(start, end - timesteps + 1):
            out.append((dataset.frame_ref[i:i + timesteps].copy(), float(dataset.labels[i + timesteps - 1])))
        start = end
    return out


def window_arrays(dataset: Dataset, timesteps: int) -> tuple[np.ndarray, np.ndarray]:
    """Same windows as :func:`sequence_windows`, as ``(refs (M, T), labels (M,))`` arrays."""
    wins = sequence_windows(dataset, timesteps)
    if not wins:
        return np.zeros((0, timesteps), np.int64), np.zeros(0)
    return np.stack([w[0] for w in wins]), np.array([w[1] for w in wins])


def recompute_label(trace: RolloutTrace, path: WaypointPath, k: int) -> float:
    return relative_yaw(trace.poses[k], path.waypoints[trace.next_wp[k]])


def dataset_digest(dataset: Dataset) -> str:
    import hashlib

    h = hashlib.sha256()
    h.update(json.dumps(dataset.manifest, sort_keys=True).encode())
    h.update(dataset.samples_csv().encode())
    h.update(np.ascontiguousarray(dataset.frames, dtype="<f4").tobytes())
    return h.hexdigest()
