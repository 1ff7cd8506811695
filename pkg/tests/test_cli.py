import json
import math
import os

import pytest

from envnav.cli import main, run_lock, tree_digest
from envnav.config import RunConfig, load_config, parse_config
from envnav.errors import ConfigError, EnvNavError

TINY = """
[world]
block_count = 40
area_extent = 60

[camera]
width = 32
height = 18

[envelope]
auxiliary_path_count = 2

[train]
epochs = 2
hidden = 16, 8
gru_hidden = 8

[eval]
trials = 2

[path]
kind = L
leg = 15
"""


@pytest.fixture
def tiny_cfg(tmp_path):
    f = tmp_path / "tiny.cfg"
    f.write_text(TINY)
    return f


def run(argv, capsys):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_path_stats_l_example(tmp_path, capsys):
    f = tmp_path / "demo.json"
    f.write_text(json.dumps({"id": "demo", "waypoints": [[0, 0], [0, 10], [10, 10]]}))
    code, out, _ = run(["path", "stats", f], capsys)
    assert code == 0
    assert "distance 20.0" in out
    code, out, _ = run(["path", "stats", f, "--json"], capsys)
    data = json.loads(out)
    assert data["distance"] == 20.0 and data["sum_angle_change"] == math.pi / 2


def test_path_make_zigzag_six_turns(tmp_path, capsys):
    f = tmp_path / "z.json"
    assert run(["path", "make", "zigzag", "--turns", 6, "--out", f, "--quiet"], capsys)[0] == 0
    code, out, _ = run(["path", "stats", f, "--json"], capsys)
    assert json.loads(out)["sum_angle_change"] == pytest.approx(3 * math.pi, abs=1e-12)


def test_exit_codes(tmp_path, capsys):
    code, _, err = run(["train", "--dataset", tmp_path / "missing"], capsys)
    assert code == 3 and "missing" in err
    assert run(["frobnicate"], capsys)[0] == 2
    assert run(["train"], capsys)[0] == 2
    assert run(["path", "make", "straight", "--length", -1], capsys)[0] == 3
    assert run(["eval", "--checkpoint", tmp_path / "no.ckpt", "--path", "x", "--world", "y"], capsys)[0] == 3


def test_config_roundtrip_fixed_point():
    cfg = parse_config(TINY)
    assert parse_config(cfg.canonical()) == cfg
    assert parse_config(cfg.canonical()).canonical() == cfg.canonical()
    assert parse_config("") == RunConfig()
    assert cfg.camera.width == 32 and cfg.train.hidden == (16, 8)
    assert dict(cfg.path.params) == {"leg": 15.0}


@pytest.mark.parametrize("text", [
    "[world]\nblocks = 3\n",
    "[nonsense]\nx = 1\n",
    "[camera]\nwidth = 30\nheight = 18\n",
    "[train]\nepochs = many\n",
    "[pipeline]\nvariants = lstm\n",
    "[path]\nkind = spiral\n",
])
def test_config_rejects_bad_input(text):
    with pytest.raises((ConfigError, ValueError)):
        parse_config(text)


def test_seed_override_and_env(monkeypatch, tiny_cfg):
    a = load_config(tiny_cfg, seed=5)
    assert a.world_seed == 5 and a.envelope.seed == 5 and a.eval.eval_seed == 5 and a.train.init_seed == 5
    assert a.run_name() != load_config(tiny_cfg).run_name()
    monkeypatch.setenv("ENVNAV_SEED", "5")
    assert load_config(tiny_cfg) == a
    assert load_config(tiny_cfg, seed=6).world_seed == 6


def test_run_lock(tmp_path):
    with run_lock(tmp_path):
        with pytest.raises(EnvNavError):
            with run_lock(tmp_path):
                pass
    assert not (tmp_path / ".lock").exists()


def test_step_by_step_commands(tmp_path, tiny_cfg, capsys):
    c = ["--config", tiny_cfg, "--quiet"]
    p, w, d, ck = tmp_path / "p.json", tmp_path / "w.json", tmp_path / "ds", tmp_path / "m.ckpt"
    assert run(["path", "make", "L", "--leg", 15, "--out", p, *c], capsys)[0] == 0
    assert run(["world", "gen", "--path", p, "--out", w, *c], capsys)[0] == 0
    assert run(["dataset", "build", "--path", p, "--world", w, "--out", d, *c], capsys)[0] == 0
    assert (d / "manifest.json").is_file() and (d / "frames.f32").is_file()
    assert run(["train", "--dataset", d, "--out", ck, *c], capsys)[0] == 0
    code, out, _ = run(["eval", "--checkpoint", ck, "--path", p, "--world", w, "--out", tmp_path / "ev",
                        "--baseline", "--config", tiny_cfg, "--json"], capsys)
    assert code == 0
    assert [r["label"] for r in json.loads(out)] == ["fcnn", "blind"]
    assert (tmp_path / "ev" / "report.csv").read_text().startswith("variant,random_start,MWMD,MCTD,completed_trials")
    code, _, _ = run(["compare", "--checkpoint", f"fcnn={ck}", "--checkpoint", f"gru2={tmp_path / 'none'}",
                      "--path", p, "--world", w, "--out", tmp_path / "cmp", *c], capsys)
    assert code == 3
    trace = next((tmp_path / "ev" / "traces").glob("fcnn_trial0.csv"))
    code, _, err = run(["plot", "--path", p, "--trace", trace, "--out", tmp_path / "plot.svg", *c], capsys)
    assert code == 0, err
    assert (tmp_path / "plot.svg").read_text().startswith("<svg")


def test_pipeline_deterministic(tmp_path, tiny_cfg, capsys):
    hashes = []
    for root in ("a", "b"):
        code, out, _ = run(["pipeline", "--config", tiny_cfg, "--seed", 1, "--out", tmp_path / root, "--json"],
                           capsys)
        assert code == 0
        hashes.append(json.loads(out)["content_hash"])
    assert hashes[0] == hashes[1]
    runs = os.listdir(tmp_path / "a")
    assert len(runs) == 1 and runs[0].startswith("run-")
    d = tmp_path / "a" / runs[0]
    summary = json.loads((d / "summary.json").read_text())
    for rel in ("config", "path", "world", "dataset_manifest", "report"):
        assert (d / summary["artifacts"][rel]).is_file()
    assert all((d / x).is_file() for x in summary["artifacts"]["checkpoints"] + summary["artifacts"]["plots"])
    assert tree_digest(d) == hashes[0]
