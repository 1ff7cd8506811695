"""Completion rate of the trained FCNN across world seeds.

Each seed gets its own world, dataset and model; the sweep reports how many
random-start trials complete, which is what the 5-of-5 requirement of the
scaled experiment depends on.

    python scripts/robustness_sweep.py --seeds 1 2 3 --trials 10 --set world.block_count=400
"""

import argparse
import time
from dataclasses import replace

from envnav.config import load_config, parse_config
from envnav.datagen import build_dataset
from envnav.evaluation import evaluate
from envnav.model.training import train
from envnav.world import generate_world


def apply_overrides(cfg, items):
    if not items:
        return cfg
    sections = {}
    for item in items:
        key, value = item.split("=", 1)
        section, name = key.split(".", 1)
        sections.setdefault(section, []).append(f"{name} = {value}")
    text = cfg.canonical()
    for section, lines in sections.items():
        text += f"\n[{section}]\n" + "\n".join(lines) + "\n"
    # later duplicate sections are not allowed by configparser, so merge by re-parsing
    import configparser

    cp = configparser.ConfigParser(interpolation=None, strict=False)
    cp.optionxform = str
    cp.read_string(text)
    merged = "\n".join(f"[{s}]\n" + "\n".join(f"{k} = {v}" for k, v in cp[s].items()) for s in cp.sections())
    return parse_config(merged)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    args = ap.parse_args()

    base = apply_overrides(load_config(args.config), args.set)
    done = total = 0
    for seed in args.seeds:
        t = time.perf_counter()
        cfg = base.with_seed(seed)
        cfg = replace(cfg, eval=replace(cfg.eval, trials=args.trials))
        path = cfg.path.build()
        world = generate_world(cfg.world_seed, cfg.world, keepout=path.waypoints)
        ds = build_dataset(path, world, cfg.envelope, cfg.camera, cfg.sim)
        model, curve = train(ds, "fcnn", cfg.train)
        r = evaluate(model, path, world, cfg.sim, cfg.eval)
        done += r.completed
        total += len(r.trials)
        print(f"seed {seed}: completed {r.completed}/{len(r.trials)}, MCTD {r.mctd:.2f} m, MWMD {r.mwmd:.2f} m, "
              f"loss {curve[-1]:.5f}, {time.perf_counter() - t:.0f} s", flush=True)
    print(f"total completed {done}/{total}")


if __name__ == "__main__":
    main()
