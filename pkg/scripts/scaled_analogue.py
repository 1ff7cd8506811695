"""Train an FCNN on the default zigzag and fly it against the blind baseline.

    python scripts/scaled_analogue.py --seed 1 --trials 5 --out runs/analogue
"""

import argparse
import json
import time
from pathlib import Path

from envnav.datagen import build_dataset
from envnav.evaluation import blind_baseline, evaluate, reports_csv, save_traces
from envnav.config import load_config
from envnav.model import checkpoint
from envnav.model.training import train
from envnav.plotting import emit_path_plot
from envnav.world import generate_world


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--out", default="runs/analogue")
    args = ap.parse_args()

    cfg = load_config(args.config, args.seed)
    if args.trials:
        from dataclasses import replace

        cfg = replace(cfg, eval=replace(cfg.eval, trials=args.trials))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = cfg.path.build()
    world = generate_world(cfg.world_seed, cfg.world, keepout=path.waypoints)

    t = time.perf_counter()
    ds = build_dataset(path, world, cfg.envelope, cfg.camera, cfg.sim)
    print(f"dataset: {len(ds)} samples in {time.perf_counter() - t:.0f} s")
    t = time.perf_counter()
    model, curve = train(ds, "fcnn", cfg.train, progress=lambda e, l: e % 10 == 9 and print(f"  epoch {e + 1}: {l:.5f}"))
    print(f"training: {time.perf_counter() - t:.0f} s, final loss {curve[-1]:.5f}")
    checkpoint.save(model, out / "fcnn.ckpt", cfg.train)

    r = evaluate(model, path, world, cfg.sim, cfg.eval, label="fcnn")
    b = blind_baseline(path, cfg.sim, cfg.eval)
    refs = [save_traces(r, out / "traces", "fcnn"), save_traces(b, out / "traces", "blind")]
    (out / "report.csv").write_text(reports_csv([r, b], refs))
    (out / "report.json").write_text(json.dumps([r.to_dict(), b.to_dict()], indent=2))
    emit_path_plot(path, [t.trace for t in r.trials if t.trace], out / "fcnn.svg", title="FCNN, random start")
    emit_path_plot(path, [t.trace for t in b.trials if t.trace], out / "blind.svg", title="blind baseline")
    print(reports_csv([r, b]))
    print(f"blind MCTD over all trials: {b.mctd_all:.2f} m")


if __name__ == "__main__":
    main()
