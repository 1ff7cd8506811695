"""Self-describing binary checkpoints.

Layout::

    8 bytes   magic  b"ENVNAVCK"
    u32 LE    format version
    u32 LE    header length in bytes
    header    UTF-8 JSON: variant, shapes, seeds, train config, block table
    blocks    little-endian float32 arrays, in block-table order
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import MissingCheckpoint, ShapeMismatch, ValidationError
from .extractor import FrozenConvExtractor
from .network import Model
from .regressor import FCNN, GRU

MAGIC = b"ENVNAVCK"
VERSION = 1


def _blocks(model: Model) -> list[tuple[str, np.ndarray]]:
    out = [(f"extractor.{i}", w) for i, w in enumerate(model.extractor.weights)]
    out.append(("feature_scale", model.feature_scale))
    out += [(f"regressor.{k}", v) for k, v in model.regressor.params.items()]
    return out


def to_bytes(model: Model, train_config=None) -> bytes:
    blocks = _blocks(model)
    ext = model.extractor
    state = getattr(model, "adam_state", None)
    header = {
        "format_version": VERSION,
        "variant": model.variant,
        "kind": model.kind,
        "timesteps": model.timesteps,
        "hidden": list(model.regressor.hidden),
        "input_dim": model.regressor.input_dim,
        "frame_shape": list(ext.frame_shape),
        "extractor": {"channels": list(ext.channels), "kernel": ext.kernel, "seed": ext.seed,
                      "weight_hash": ext.weight_hash()},
        "train_config": None if train_config is None else asdict(train_config),
        "adam_steps": None if state is None else state.t,
        "blocks": [{"name": n, "shape": list(a.shape)} for n, a in blocks],
    }
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(hb)), hb]
    parts += [np.ascontiguousarray(a, dtype="<f4").tobytes() for _, a in blocks]
    return b"".join(parts)


def save(model: Model, path, train_config=None) -> None:
    Path(path).write_bytes(to_bytes(model, train_config))


def from_bytes(data: bytes) -> tuple[Model, dict]:
    if data[:8] != MAGIC:
        raise ValidationError("not a checkpoint file (bad magic)")
    version, hlen = struct.unpack("<II", data[8:16])
    if version != VERSION:
        raise ValidationError(f"unsupported checkpoint version {version}")
    header = json.loads(data[16:16 + hlen].decode("utf-8"))
    off = 16 + hlen
    arrays = {}
    for b in header["blocks"]:
        n = int(np.prod(b["shape"])) if b["shape"] else 1
        end = off + 4 * n
        if end > len(data):
            raise ShapeMismatch(f"checkpoint truncated in block {b['name']}")
        arrays[b["name"]] = np.frombuffer(data[off:end], dtype="<f4").reshape(b["shape"])
        off = end
    if off != len(data):
        raise ShapeMismatch("trailing bytes after the last checkpoint block")

    e = header["extractor"]
    weights = [arrays[f"extractor.{i}"] for i in range(len(e["channels"]))]
    ext = FrozenConvExtractor(header["frame_shape"], e["channels"], e["kernel"], e["seed"], weights=weights)
    if ext.weight_hash() != e["weight_hash"]:
        raise ValidationError("extractor weights do not match their recorded hash")
    params = {k[len("regressor."):]: v.astype(np.float64) for k, v in arrays.items() if k.startswith("regressor.")}
    if header["kind"] == "fcnn":
        reg = FCNN(header["input_dim"], header["hidden"], params=params)
        expected = FCNN(header["input_dim"], header["hidden"])
    else:
        reg = GRU(header["input_dim"], header["hidden"][0], header["timesteps"], params=params)
        expected = GRU(header["input_dim"], header["hidden"][0], header["timesteps"])
    for k, v in expected.params.items():
        if k not in reg.params or reg.params[k].shape != v.shape:
            raise ShapeMismatch(f"checkpoint parameter {k} missing or mis-shaped")
    model = Model(ext, reg, arrays["feature_scale"].astype(np.float64))
    return model, header


def load(path) -> tuple[Model, dict]:
    p = Path(path)
    if not p.is_file():
        raise MissingCheckpoint(f"checkpoint not found: {p}")
    return from_bytes(p.read_bytes())
