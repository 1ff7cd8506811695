import numpy as np
import pytest

from envnav.datagen import Dataset, EnvelopeConfig, build_dataset
from envnav.errors import EmptyBatch
from envnav.geometry import WaypointPath
from envnav.model import checkpoint
from envnav.model.training import TrainConfig, epoch_order, train
from envnav.world import CameraSpec, WorldParams, generate_world


def constant_dataset(n, label, shape=(18, 32), value=0.5, paths=1):
    frames = np.full((n, *shape), value, np.float32)
    per = n // paths
    return Dataset(
        {"sample_count": n, "frame_shape": list(shape)},
        frames,
        np.arange(n),
        np.full(n, label),
        np.repeat(np.arange(paths), per),
        np.tile(np.arange(per), paths),
    )


@pytest.fixture(scope="module")
def straight_zero_label():
    p = WaypointPath("s", [(0, 0), (0, 20)])
    w = generate_world(2, WorldParams(block_count=40, area_extent=60), keepout=p.waypoints)
    env = EnvelopeConfig(auxiliary_path_count=4, position_noise=0.0, yaw_noise=0.0)
    return build_dataset(p, w, env, CameraSpec(32, 18))


@pytest.mark.parametrize("variant", ["fcnn", "gru2"])
def test_constant_label_fit(variant):
    ds = constant_dataset(640, 0.3, paths=4)
    model, curve = train(ds, variant, TrainConfig(hidden=(16, 8), gru_hidden=8))
    x = ds.frames[0] if variant == "fcnn" else ds.frames[:2]
    assert abs(model.forward(x) - 0.3) < 1e-2
    assert curve[-1] < curve[0]


def test_training_deterministic(straight_zero_label, tmp_path):
    cfg = TrainConfig(epochs=3, hidden=(16, 8))
    a, ca = train(straight_zero_label, "fcnn", cfg)
    b, cb = train(straight_zero_label, "fcnn", cfg)
    assert ca == cb
    checkpoint.save(a, tmp_path / "a.ckpt", cfg)
    checkpoint.save(b, tmp_path / "b.ckpt", cfg)
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    c, _ = train(straight_zero_label, "fcnn", TrainConfig(epochs=3, hidden=(16, 8), shuffle_seed=1))
    assert checkpoint.to_bytes(c) != checkpoint.to_bytes(a)


def test_loss_curve_smoke(straight_zero_label):
    assert np.all(straight_zero_label.labels == 0.0)
    model, curve = train(straight_zero_label, "fcnn", TrainConfig(hidden=(16, 8)))
    assert len(curve) == 100
    violations = sum(b > a for a, b in zip(curve[5:], curve[6:]))
    assert violations <= 3
    assert all(v >= 0 for v in curve)


def test_gru_trains_on_windows(straight_zero_label):
    model, curve = train(straight_zero_label, "gru4", TrainConfig(epochs=2, gru_hidden=8))
    assert model.timesteps == 4 and len(curve) == 2
    assert np.isfinite(model.forward(straight_zero_label.frames[:4]))


def test_extractor_frozen_and_adam_steps(straight_zero_label):
    from envnav.model import Model

    cfg = TrainConfig(epochs=2, hidden=(8, 8))
    fresh = Model.create("fcnn", (18, 32), channels=cfg.extractor_channels, extractor_seed=cfg.extractor_seed)
    model, _ = train(straight_zero_label, "fcnn", cfg)
    assert model.extractor.weight_hash() == fresh.extractor.weight_hash()
    batches = -(-len(straight_zero_label) // cfg.batch_size)
    assert model.adam_state.t == 2 * batches


def test_epoch_order_is_a_seeded_permutation():
    a = epoch_order(100, 0, 3)
    assert sorted(a.tolist()) == list(range(100))
    assert np.array_equal(a, epoch_order(100, 0, 3))
    assert not np.array_equal(a, epoch_order(100, 0, 4))


def test_train_rejects_empty():
    ds = constant_dataset(0, 0.0)
    with pytest.raises(EmptyBatch):
        train(ds, "fcnn", TrainConfig(epochs=1))
