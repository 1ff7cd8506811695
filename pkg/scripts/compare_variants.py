"""FCNN vs GRU-2 vs GRU-4, with and without random start, on two paths.

Writes one CSV per path with one row per variant and start mode.  The
defaults are scaled down (auxiliary flights, epochs) so a run finishes in
well under an hour on one core; pass --full for the configured defaults.
"""

import argparse
from dataclasses import replace
from pathlib import Path

from envnav.config import load_config
from envnav.datagen import build_dataset
from envnav.evaluation import compare_regressors
from envnav.model import checkpoint
from envnav.model.training import train
from envnav.paths import make_path
from envnav.world import generate_world


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--out", default="runs/compare")
    args = ap.parse_args()

    cfg = load_config(args.config, args.seed)
    if not args.full:
        cfg = replace(cfg, envelope=replace(cfg.envelope, auxiliary_path_count=8), train=replace(cfg.train, epochs=30))
    out = Path(args.out)
    for path in (make_path("L", leg=30.0), make_path("zigzag")):
        world = generate_world(cfg.world_seed, cfg.world, keepout=path.waypoints)
        ds = build_dataset(path, world, cfg.envelope, cfg.camera, cfg.sim)
        cks = {}
        for variant in ("fcnn", "gru2", "gru4"):
            model, curve = train(ds, variant, cfg.train)
            print(f"{path.id} {variant}: final loss {curve[-1]:.5f}")
            cks[variant] = out / path.id / f"{variant}.ckpt"
            cks[variant].parent.mkdir(parents=True, exist_ok=True)
            checkpoint.save(model, cks[variant], cfg.train)
        _, text = compare_regressors(path, world, cks, cfg.sim, cfg.eval, trace_dir=out / path.id / "traces")
        (out / path.id / "compare.csv").write_text(text)
        print(text)


if __name__ == "__main__":
    main()
