"""Command-line entry point: ``envnav <command> ...``.

Exit codes: 0 success, 1 runtime error, 2 usage error, 3 validation error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .config import PATH_KINDS, RunConfig, load_config, output_root
from .datagen import Dataset, build_dataset
from .errors import EnvNavError, InvalidParams, MissingFile, ValidationError
from .evaluation import blind_baseline, compare_regressors, evaluate, reports_csv, save_traces
from .geometry import WaypointPath, path_distance, sum_angle_change
from .model import checkpoint
from .model.training import train
from .paths import make_path
from .plotting import emit_path_plot
from .world import BlockWorld, generate_world


class Output:
    def __init__(self, quiet=False, as_json=False):
        self.quiet, self.as_json = quiet, as_json

    def log(self, msg):
        if not self.quiet:
            print(msg, file=sys.stderr)

    def result(self, data: dict, text: str):
        if self.as_json:
            print(json.dumps(data, sort_keys=True))
        elif not self.quiet:
            print(text)


@contextmanager
def run_lock(directory: Path):
    """Exclusive lock file so two commands never write one run directory at once."""
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise EnvNavError(f"run directory is locked by another process: {lock}") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _require(path, what) -> Path:
    p = Path(path)
    if not p.exists():
        raise MissingFile(f"{what} not found: {p}")
    return p


def _out_file(args, default: str) -> Path:
    out = Path(args.out) if args.out else output_root() / default
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _cfg(args) -> RunConfig:
    return load_config(args.config, args.seed)


def cmd_world_gen(args, out: Output):
    cfg = _cfg(args)
    keepout = WaypointPath.load(_require(args.path, "path file")).waypoints if args.path else None
    world = generate_world(cfg.world_seed, cfg.world, keepout=keepout)
    f = _out_file(args, "world.json")
    world.save(f)
    out.result({"world": str(f), "blocks": len(world.blocks)}, f"wrote {f} ({len(world.blocks)} blocks)")


def cmd_path_make(args, out: Output):
    params = {k: getattr(args, k) for k in ("length", "waypoints", "leg", "segment", "turns", "spacing", "radius")
              if getattr(args, k) is not None}
    p = make_path(args.kind, path_id=args.id or args.kind, **params)
    f = _out_file(args, f"{p.id}.json")
    p.save(f)
    out.result({"path": str(f), "waypoints": len(p.waypoints)}, f"wrote {f} ({len(p.waypoints)} waypoints)")


def cmd_path_stats(args, out: Output):
    p = WaypointPath.load(_require(args.file, "path file"))
    d, a = path_distance(p), sum_angle_change(p)
    out.result({"id": p.id, "waypoints": len(p.waypoints), "distance": d, "sum_angle_change": a},
               f"id {p.id}\nwaypoints {len(p.waypoints)}\ndistance {d}\nsum_angle_change {a}")


def cmd_dataset_build(args, out: Output):
    cfg = _cfg(args)
    path = WaypointPath.load(_require(args.path, "path file"))
    world = BlockWorld.load(_require(args.world, "world file"))
    ds = build_dataset(path, world, cfg.envelope, cfg.camera, cfg.sim,
                       progress=lambda i, n: out.log(f"auxiliary path {i}: {n} samples"))
    d = Path(args.out) if args.out else output_root() / "dataset"
    ds.save(d)
    out.result({"dataset": str(d), "samples": len(ds), "regenerated_flights": ds.manifest["regenerated_flights"]},
               f"wrote {d} ({len(ds)} samples)")


def cmd_train(args, out: Output):
    cfg = _cfg(args)
    ds = Dataset.load(_require(args.dataset, "dataset directory"))
    model, curve = train(ds, args.variant, cfg.train,
                         progress=lambda e, l: out.log(f"epoch {e}: loss {l:.6f}"))
    f = _out_file(args, f"{model.variant}.ckpt")
    checkpoint.save(model, f, cfg.train)
    out.result({"checkpoint": str(f), "final_loss": curve[-1], "loss_curve": curve},
               f"wrote {f} (final loss {curve[-1]:.6f})")


def _report_text(reports) -> str:
    return reports_csv(reports).rstrip("\n")


def cmd_eval(args, out: Output):
    cfg = _cfg(args)
    model, _ = checkpoint.load(args.checkpoint)
    path = WaypointPath.load(_require(args.path, "path file"))
    world = BlockWorld.load(_require(args.world, "world file"))
    d = Path(args.out) if args.out else output_root() / "eval"
    with run_lock(d):
        r = evaluate(model, path, world, cfg.sim, cfg.eval, label=model.variant)
        reports = [r]
        refs = [save_traces(r, d / "traces", model.variant)]
        if args.baseline:
            b = blind_baseline(path, cfg.sim, cfg.eval)
            reports.append(b)
            refs.append(save_traces(b, d / "traces", "blind"))
        (d / "report.csv").write_text(reports_csv(reports, refs))
        (d / "report.json").write_text(json.dumps([x.to_dict() for x in reports], indent=2, sort_keys=True) + "\n")
        traces = [t.trace for t in r.trials if t.trace is not None]
        if traces:
            emit_path_plot(path, traces, d / "plot.svg", title=f"{path.id}: {model.variant}")
    out.result([x.to_dict() for x in reports], _report_text(reports))


def cmd_compare(args, out: Output):
    cfg = _cfg(args)
    path = WaypointPath.load(_require(args.path, "path file"))
    world = BlockWorld.load(_require(args.world, "world file"))
    cks = {}
    for item in args.checkpoint:
        if "=" not in item:
            raise InvalidParams(f"--checkpoint expects VARIANT=FILE, got {item!r}")
        k, v = item.split("=", 1)
        cks[k] = v
    d = Path(args.out) if args.out else output_root() / "compare"
    with run_lock(d):
        reports, text = compare_regressors(path, world, cks, cfg.sim, cfg.eval, trace_dir=d / "traces")
        (d / "compare.csv").write_text(text)
    out.result([r.to_dict() for r in reports], text.rstrip("\n"))


def read_trace_positions(file) -> np.ndarray:
    with open(_require(file, "trace file"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "x" not in rows[0]:
        raise ValidationError(f"{file} is not a trace CSV")
    return np.array([(float(r["x"]), float(r["y"])) for r in rows])


def cmd_plot(args, out: Output):
    path = WaypointPath.load(_require(args.path, "path file"))
    traces = [read_trace_positions(t) for t in args.trace]
    f = emit_path_plot(path, traces, _out_file(args, "plot.svg"), title=args.title)
    out.result({"plot": str(f)}, f"wrote {f}")


def tree_digest(directory: Path) -> str:
    """sha256 over every file's relative path and bytes, in sorted order."""
    h = hashlib.sha256()
    for p in sorted(x for x in directory.rglob("*") if x.is_file() and x.name != ".lock"):
        h.update(p.relative_to(directory).as_posix().encode() + b"\0")
        h.update(hashlib.sha256(p.read_bytes()).digest())
    return h.hexdigest()


def run_pipeline(cfg: RunConfig, root: Path, log=lambda m: None) -> Path:
    """World, path, dataset, one checkpoint per variant, evaluation, plots.

    Everything lands in ``root/run-<config hash>``; files are rewritten
    from scratch, so a re-run with the same config reproduces the same bytes.
    """
    d = Path(root) / cfg.run_name()
    with run_lock(d):
        (d / "config.cfg").write_text(cfg.canonical())
        path = cfg.path.build()
        path.save(d / "path.json")
        world = generate_world(cfg.world_seed, cfg.world, keepout=path.waypoints)
        world.save(d / "world.json")
        log(f"building dataset ({cfg.envelope.auxiliary_path_count} auxiliary flights)")
        ds = build_dataset(path, world, cfg.envelope, cfg.camera, cfg.sim)
        ds.save(d / "dataset")
        reports, refs, curves = [], [], {}
        for variant in cfg.variants:
            log(f"training {variant} on {len(ds)} samples")
            model, curve = train(ds, variant, cfg.train)
            curves[model.variant] = curve
            (d / "models").mkdir(exist_ok=True)
            checkpoint.save(model, d / "models" / f"{model.variant}.ckpt", cfg.train)
            log(f"evaluating {variant}")
            r = evaluate(model, path, world, cfg.sim, cfg.eval, label=model.variant)
            reports.append(r)
            refs.append(save_traces(r, d / "traces", model.variant))
            traces = [t.trace for t in r.trials if t.trace is not None]
            if traces:
                emit_path_plot(path, traces, d / "plots" / f"{model.variant}.svg", title=f"{path.id}: {model.variant}")
        b = blind_baseline(path, cfg.sim, cfg.eval)
        reports.append(b)
        refs.append(save_traces(b, d / "traces", "blind"))
        (d / "report.csv").write_text(reports_csv(reports, refs))
        summary = {
            "config_digest": cfg.digest(),
            "path": {"id": path.id, "distance": path_distance(path), "sum_angle_change": sum_angle_change(path)},
            "dataset_samples": len(ds),
            "loss_curves": curves,
            "reports": [r.to_dict() for r in reports],
            "artifacts": {"config": "config.cfg", "path": "path.json", "world": "world.json",
                          "dataset_manifest": "dataset/manifest.json",
                          "checkpoints": [f"models/{v}.ckpt" for v in curves],
                          "report": "report.csv", "plots": [f"plots/{v}.svg" for v in curves]},
        }
        (d / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")
    return d


def _json_default(o):
    if isinstance(o, float) and math.isnan(o):
        return None
    raise TypeError(type(o))


def cmd_pipeline(args, out: Output):
    cfg = _cfg(args)
    d = run_pipeline(cfg, output_root(args.out), out.log)
    digest = tree_digest(d)
    rows = reports_csv_from(d)
    out.result({"run_dir": str(d), "content_hash": digest}, f"run directory {d}\ncontent hash {digest}\n{rows}")


def reports_csv_from(d: Path) -> str:
    return (d / "report.csv").read_text().rstrip("\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for every random stream")
    common.add_argument("--config", default=None, help="run configuration file (INI sections)")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--quiet", action="store_true", help="no progress or result text")
    common.add_argument("--json", action="store_true", help="print the result as one JSON object")

    ap = argparse.ArgumentParser(prog="envnav", description="Visual path following with navigation-envelope data.")
    sub = ap.add_subparsers(dest="command", required=True)

    world = sub.add_parser("world", help="block worlds").add_subparsers(dest="action", required=True)
    g = world.add_parser("gen", parents=[common], help="generate a world")
    g.add_argument("--path", help="keep blocks clear of this path")
    g.set_defaults(func=cmd_world_gen)

    path = sub.add_parser("path", help="waypoint paths").add_subparsers(dest="action", required=True)
    m = path.add_parser("make", parents=[common], help="make a canonical path")
    m.add_argument("kind", choices=PATH_KINDS)
    m.add_argument("--id")
    for k, t in (("length", float), ("waypoints", int), ("leg", float), ("segment", float), ("turns", int),
                 ("spacing", float), ("radius", float)):
        m.add_argument(f"--{k}", type=t)
    m.set_defaults(func=cmd_path_make)
    s = path.add_parser("stats", parents=[common], help="distance and angle change of a path file")
    s.add_argument("file")
    s.set_defaults(func=cmd_path_stats)

    ds = sub.add_parser("dataset", help="training data").add_subparsers(dest="action", required=True)
    b = ds.add_parser("build", parents=[common], help="fly the navigation envelope")
    b.add_argument("--path", required=True)
    b.add_argument("--world", required=True)
    b.set_defaults(func=cmd_dataset_build)

    t = sub.add_parser("train", parents=[common], help="train a regressor")
    t.add_argument("--dataset", required=True)
    t.add_argument("--variant", default="fcnn")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", parents=[common], help="closed-loop evaluation")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--path", required=True)
    e.add_argument("--world", required=True)
    e.add_argument("--baseline", action="store_true", help="also fly the blind constant-zero controller")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", parents=[common], help="compare variants with and without random start")
    c.add_argument("--checkpoint", action="append", required=True, metavar="VARIANT=FILE")
    c.add_argument("--path", required=True)
    c.add_argument("--world", required=True)
    c.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot", parents=[common], help="overhead SVG plot of traces")
    p.add_argument("--path", required=True)
    p.add_argument("--trace", action="append", required=True)
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)

    pl = sub.add_parser("pipeline", parents=[common], help="end to end run in a config-hash directory")
    pl.set_defaults(func=cmd_pipeline)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    out = Output(args.quiet, args.json)
    try:
        args.func(args, out)
    except ValidationError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except Exception as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return getattr(e, "exit_code", 1) if isinstance(e, EnvNavError) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
