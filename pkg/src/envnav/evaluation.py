"""Closed-loop evaluation of trained controllers against the true path."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import STREAM_EVAL, noise_stream, step_draws
from .errors import InvalidParams, MissingCheckpoint
from .geometry import WaypointPath, mean_cross_track_distance, mean_waypoint_min_distance, path_distance, sum_angle_change
from .sim import RolloutTrace, SimConfig, Status, rollout, start_pose, zero_controller
from .world import BlockWorld, CameraSpec

STREAM_START = 0x5354  # start-pose perturbations, disjoint from the in-flight stream
ERROR = "Error"  # trial aborted by a controller exception


@dataclass(frozen=True)
class EvalConfig:
    random_start: bool = True
    start_position_noise: float = 1.0
    start_yaw_noise: float = 0.1
    inflight_position_noise: float = 1.0
    inflight_yaw_noise: float = 0.1
    trials: int = 5
    eval_seed: int = 0

    def __post_init__(self):
        if min(self.start_position_noise, self.start_yaw_noise,
               self.inflight_position_noise, self.inflight_yaw_noise) < 0:
            raise InvalidParams("noise magnitudes must be >= 0")
        if self.trials < 1:
            raise InvalidParams("trials must be >= 1")


@dataclass
class TrialResult:
    trial: int
    status: str
    steps: int
    mwmd: float
    mctd: float
    trace: RolloutTrace | None = field(default=None, repr=False)
    error: str | None = None


@dataclass
class MetricsReport:
    label: str
    random_start: bool
    path_id: str
    path_distance: float
    sum_angle_change: float
    trials: list

    @property
    def included(self) -> list:
        """Trials that enter the distance means: everything except Diverged (and aborted) runs."""
        return [t for t in self.trials if t.status not in (Status.DIVERGED.value, ERROR)]

    @property
    def completed(self) -> int:
        return sum(t.status == Status.COMPLETED.value for t in self.trials)

    @property
    def excluded(self) -> int:
        return len(self.trials) - len(self.included)

    @property
    def mwmd(self) -> float:
        inc = self.included
        return float(np.mean([t.mwmd for t in inc])) if inc else math.nan

    @property
    def mctd(self) -> float:
        inc = self.included
        return float(np.mean([t.mctd for t in inc])) if inc else math.nan

    @property
    def mctd_all(self) -> float:
        """Cross-track mean over every trial that produced a trajectory, diverged ones included."""
        vals = [t.mctd for t in self.trials if not math.isnan(t.mctd)]
        return float(np.mean(vals)) if vals else math.nan

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "random_start": self.random_start,
            "path_id": self.path_id,
            "path_distance": self.path_distance,
            "sum_angle_change": self.sum_angle_change,
            "mwmd": self.mwmd,
            "mctd": self.mctd,
            "mctd_all": self.mctd_all,
            "completed_trials": self.completed,
            "excluded_trials": self.excluded,
            "trials": [
                {"trial": t.trial, "status": t.status, "steps": t.steps, "mwmd": t.mwmd, "mctd": t.mctd,
                 "error": t.error}
                for t in self.trials
            ],
        }


def trial_start(path: WaypointPath, sim_config: SimConfig, config: EvalConfig, trial: int):
    if not config.random_start:
        return start_pose(path, sim_config)
    u = step_draws(config.eval_seed, STREAM_START, trial)
    p, q = config.start_position_noise, config.start_yaw_noise
    return start_pose(path, sim_config, offset=(p * u[0], p * u[1]), yaw_offset=q * u[2])


def _controller_for(model):
    if hasattr(model, "controller"):
        return model.controller(), getattr(model, "frame_shape", None)
    return model, None


def evaluate(model, path: WaypointPath, world: BlockWorld | None, sim_config: SimConfig | None = None,
             config: EvalConfig | None = None, camera: CameraSpec | None = None,
             label: str = "model") -> MetricsReport:
    """Fly ``config.trials`` closed-loop rollouts and score them against ``path``.

    ``model`` is anything with a ``controller()`` method (a trained
    :class:`~envnav.model.Model`) or a bare controller callable.
    """
    sim_config = sim_config or SimConfig()
    config = config or EvalConfig()
    controller, frame_shape = _controller_for(model)
    if camera is None and frame_shape is not None:
        camera = CameraSpec(width=frame_shape[1], height=frame_shape[0])
    results = []
    for trial in range(config.trials):
        noise = noise_stream(config.inflight_position_noise, config.inflight_yaw_noise, config.eval_seed,
                             (STREAM_EVAL, trial))
        start = trial_start(path, sim_config, config, trial)
        try:
            tr = rollout(path, controller, world, sim_config, start, camera=camera, noise=noise,
                         keep_frames=False)
        except Exception as e:  # a broken model aborts this trial only
            results.append(TrialResult(trial, ERROR, 0, math.nan, math.nan, None, f"{type(e).__name__}: {e}"))
            continue
        pos = tr.positions()
        results.append(TrialResult(trial, tr.status.value, tr.steps,
                                   mean_waypoint_min_distance(path, pos),
                                   mean_cross_track_distance(path, pos), tr))
    return MetricsReport(label, config.random_start, path.id, path_distance(path), sum_angle_change(path), results)


def blind_baseline(path: WaypointPath, sim_config: SimConfig | None = None,
                   config: EvalConfig | None = None) -> MetricsReport:
    """The constant-zero controller flown under the same noise; needs no rendering."""
    return evaluate(zero_controller, path, None, sim_config, config, label="blind")


CSV_COLUMNS = ["variant", "random_start", "MWMD", "MCTD", "completed_trials", "trials", "diverged_trials",
               "aggregate_note", "traces"]


def _fmt(x: float) -> str:
    return "Diverged" if math.isnan(x) else f"{x:.4f}"


def report_rows(reports, trace_refs=None) -> list[dict]:
    rows = []
    for i, r in enumerate(reports):
        refs = trace_refs[i] if trace_refs else []
        rows.append({
            "variant": r.label,
            "random_start": "Yes" if r.random_start else "No",
            "MWMD": _fmt(r.mwmd),
            "MCTD": _fmt(r.mctd),
            "completed_trials": r.completed,
            "trials": len(r.trials),
            "diverged_trials": r.excluded,
            "aggregate_note": f"means over {len(r.included)} non-diverged trials",
            "traces": ";".join(refs),
        })
    return rows


def reports_csv(reports, trace_refs=None) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
    wr.writeheader()
    wr.writerows(report_rows(reports, trace_refs))
    return buf.getvalue()


def save_traces(report: MetricsReport, directory, prefix: str) -> list[str]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    refs = []
    for t in report.trials:
        if t.trace is None:
            continue
        name = f"{prefix}_trial{t.trial}.csv"
        t.trace.save_csv(d / name)
        refs.append(f"{d.name}/{name}")
    return refs


def compare_regressors(path: WaypointPath, world: BlockWorld, checkpoints: dict, sim_config: SimConfig | None = None,
                       config: EvalConfig | None = None, trace_dir=None) -> tuple[list[MetricsReport], str]:
    """Evaluate each ``{variant: checkpoint_path}`` with and without random start.

    Returns the reports and the comparison CSV.  Every checkpoint is loaded
    first, so a missing one fails before any flight is made.
    """
    from dataclasses import replace

    from .model import checkpoint

    config = config or EvalConfig()
    models = {}
    for variant, ck in checkpoints.items():
        if ck is None or not Path(ck).is_file():
            raise MissingCheckpoint(f"no checkpoint for variant {variant}: {ck}")
        models[variant] = checkpoint.load(ck)[0]
    reports, refs = [], []
    for variant, model in models.items():
        for rs in (False, True):
            r = evaluate(model, path, world, sim_config, replace(config, random_start=rs), label=variant)
            reports.append(r)
            if trace_dir is not None:
                refs.append(save_traces(r, trace_dir, f"{path.id}_{variant}_{'rs' if rs else 'fixed'}"))
    return reports, reports_csv(reports, refs if trace_dir is not None else None)
