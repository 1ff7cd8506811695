"""Run configuration: one INI-style text file with a section per module.

Every key is optional and falls back to the module default.  Unknown
sections or keys are rejected.  ``canonical()`` writes every field in a
fixed order with fixed number formatting, so its hash is stable and names
the run directory.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path

from .datagen import EnvelopeConfig
from .errors import ConfigError, MissingFile, ValidationError
from .evaluation import EvalConfig
from .model.network import parse_variant
from .model.training import TrainConfig
from .sim import SimConfig
from .world import CameraSpec, WorldParams

ENV_SEED = "ENVNAV_SEED"
ENV_OUT = "ENVNAV_OUT"

PATH_KINDS = ("straight", "L", "zigzag", "loop")
PATH_KEYS = {"length": float, "waypoints": int, "leg": float, "segment": float, "turns": int,
             "spacing": float, "radius": float}

SECTIONS = {
    "world": WorldParams,
    "camera": CameraSpec,
    "sim": SimConfig,
    "envelope": EnvelopeConfig,
    "train": TrainConfig,
    "eval": EvalConfig,
}


@dataclass(frozen=True)
class PathSpec:
    kind: str = "zigzag"
    params: tuple = ()  # sorted (key, value) pairs passed to make_path

    def __post_init__(self):
        if self.kind not in PATH_KINDS:
            raise ConfigError(f"path kind must be one of {PATH_KINDS}")

    def build(self):
        from .paths import make_path

        return make_path(self.kind, path_id=self.kind, **dict(self.params))


@dataclass(frozen=True)
class RunConfig:
    world_seed: int = 1
    world: WorldParams = field(default_factory=WorldParams)
    camera: CameraSpec = field(default_factory=CameraSpec)
    sim: SimConfig = field(default_factory=SimConfig)
    envelope: EnvelopeConfig = field(default_factory=EnvelopeConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    path: PathSpec = field(default_factory=PathSpec)
    variants: tuple = ("fcnn",)

    def with_seed(self, seed: int) -> "RunConfig":
        """One seed for every stream; the streams stay independent through their domain tags."""
        r = dataclasses.replace
        return r(self, world_seed=seed, envelope=r(self.envelope, seed=seed),
                 train=r(self.train, shuffle_seed=seed, init_seed=seed, extractor_seed=seed),
                 eval=r(self.eval, eval_seed=seed))

    def canonical(self) -> str:
        lines = ["[world]", f"seed = {self.world_seed}"]
        lines += [f"{f.name} = {_fmt(getattr(self.world, f.name))}" for f in dataclasses.fields(WorldParams)]
        for name, cls in SECTIONS.items():
            if name == "world":
                continue
            lines += ["", f"[{name}]"]
            obj = getattr(self, name)
            lines += [f"{f.name} = {_fmt(getattr(obj, f.name))}" for f in dataclasses.fields(cls)]
        lines += ["", "[path]", f"kind = {self.path.kind}"]
        lines += [f"{k} = {_fmt(v)}" for k, v in self.path.params]
        lines += ["", "[pipeline]", f"variants = {_fmt(self.variants)}"]
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def run_name(self) -> str:
        return "run-" + self.digest()[:12]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _parse_scalar(text: str, like):
    t = text.strip()
    if isinstance(like, bool):
        low = t.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {t!r}")
    if isinstance(like, int):
        return int(t)
    if isinstance(like, float):
        return float(t)
    return t


def _parse(text: str, default):
    if isinstance(default, tuple):
        items = [s for s in (x.strip() for x in text.split(",")) if s]
        like = default[0] if default else 0.0
        return tuple(_parse_scalar(s, like) for s in items)
    return _parse_scalar(text, default)


def _build_section(cls, values: dict, section: str):
    defaults = {f.name: (f.default if f.default is not dataclasses.MISSING else f.default_factory())
                for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, text in values.items():
        if key not in defaults:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        try:
            kwargs[key] = _parse(text, defaults[key])
        except ValueError as e:
            raise ConfigError(f"[{section}] {key}: {e}") from None
    try:
        return cls(**kwargs)
    except ValidationError as e:
        raise ConfigError(f"[{section}] {e}") from None


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str  # keys are case-sensitive field names
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None
    known = set(SECTIONS) | {"path", "pipeline"}
    for s in cp.sections():
        if s not in known:
            raise ConfigError(f"unknown section [{s}]")
    kwargs = {}
    for name, cls in SECTIONS.items():
        values = dict(cp[name]) if cp.has_section(name) else {}
        if name == "world" and "seed" in values:
            try:
                kwargs["world_seed"] = int(values.pop("seed"))
            except ValueError:
                raise ConfigError("[world] seed must be an integer") from None
        kwargs[name] = _build_section(cls, values, name)
    if cp.has_section("path"):
        values = dict(cp["path"])
        kind = values.pop("kind", "zigzag")
        params = []
        for k, v in values.items():
            if k not in PATH_KEYS:
                raise ConfigError(f"unknown key {k!r} in [path]")
            try:
                params.append((k, PATH_KEYS[k](v)))
            except ValueError:
                raise ConfigError(f"[path] {k}: bad value {v!r}") from None
        kwargs["path"] = PathSpec(kind, tuple(sorted(params)))
    if cp.has_section("pipeline"):
        values = dict(cp["pipeline"])
        extra = set(values) - {"variants"}
        if extra:
            raise ConfigError(f"unknown key {sorted(extra)[0]!r} in [pipeline]")
        if "variants" in values:
            variants = tuple(v.strip() for v in values["variants"].split(",") if v.strip())
            if not variants:
                raise ConfigError("[pipeline] variants must name at least one model")
            for v in variants:
                parse_variant(v)
            kwargs["variants"] = variants
    return RunConfig(**kwargs)


def load_config(path=None, seed: int | None = None) -> RunConfig:
    """Read ``path`` (or defaults), then apply the seed override.

    The explicit ``seed`` wins over the ``ENVNAV_SEED`` environment variable.
    """
    if path is None:
        cfg = RunConfig()
    else:
        p = Path(path)
        if not p.is_file():
            raise MissingFile(f"config file not found: {p}")
        cfg = parse_config(p.read_text())
    if seed is None and os.environ.get(ENV_SEED):
        try:
            seed = int(os.environ[ENV_SEED])
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer") from None
    return cfg.with_seed(seed) if seed is not None else cfg


def output_root(out=None) -> Path:
    return Path(out or os.environ.get(ENV_OUT) or "runs")
