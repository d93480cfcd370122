"""Run configuration: defaults, then a JSON file, then same-named flags."""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .detector import VISUAL_MODES
from .encoder import PATHS
from .exceptions import ConfigError, FormatError
from .forge.corrupt import STRATEGIES
from .optim import OPTIMIZERS


@dataclass
class RunConfig:
    # model
    d_x: int = 64
    hidden: int = 64
    d_q: int = 128
    kernel_size: int = 5
    depth: int = 3
    max_len: int = 40
    paths: str = "conv+lstm"
    use_position: bool = True
    visual: str = "gated"
    # training
    epochs: int = 50
    batch_size: int = 32
    lr: float = 1e-3
    optimizer: str = "adam"
    clip: str = "auto"
    patience: int = 10
    seed: int | None = None
    # synthetic data and corruption
    strategy: str = "pos-natural"
    k: str | None = None
    n_sentences: int = 1000
    n_scenes: int = 4
    activities_per_scene: int = 2
    d_v: int = 16
    noise: float = 0.1
    activity_skew: float = 0.0
    # files
    corpus: str | None = None
    val_corpus: str | None = None
    features: str | None = None
    source: str | None = None
    checkpoint: str | None = None
    report: str | None = None
    log: str | None = None
    out: str | None = None

    def validate(self) -> "RunConfig":
        for name in ("d_x", "hidden", "d_q", "kernel_size", "depth", "max_len", "batch_size", "patience",
                     "n_sentences", "n_scenes", "activities_per_scene", "d_v"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.noise < 0 or self.activity_skew < 0:
            raise ConfigError("noise and activity_skew must be non-negative")
        choices = {"paths": PATHS, "visual": VISUAL_MODES, "optimizer": OPTIMIZERS, "strategy": STRATEGIES}
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        self.clip_value()
        return self

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigError("missing required setting(s): " + ", ".join(missing))

    def clip_value(self):
        if self.clip == "auto":
            return "auto"
        if str(self.clip).lower() in ("none", "off", "0"):
            return None
        try:
            value = float(self.clip)
        except ValueError:
            raise ConfigError(f"clip must be a number, 'auto' or 'none', got {self.clip!r}") from None
        if value <= 0:
            raise ConfigError("clip must be positive")
        return value

    def estimator_params(self) -> dict:
        return dict(
            d_x=self.d_x, hidden=self.hidden, d_q=self.d_q, kernel_size=self.kernel_size, depth=self.depth,
            max_len=self.max_len, paths=self.paths, use_position=self.use_position, visual=self.visual,
            epochs=self.epochs, batch_size=self.batch_size, lr=self.lr, optimizer=self.optimizer,
            clip=self.clip_value(), patience=self.patience, random_state=self.seed,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _parse_bool(text: str) -> bool:
    low = str(text).lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _field_type(f):
    kind = {"int": int, "float": float, "bool": _parse_bool}
    name = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "str")
    return kind.get(name.split(" ")[0], str)


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    """One ``--<field>`` flag per RunConfig field, plus ``--config``."""
    parser.add_argument("--config", help="JSON file with RunConfig fields")
    group = parser.add_argument_group("configuration (overrides the config file)")
    for f in fields(RunConfig):
        group.add_argument(f"--{f.name}", type=_field_type(f), default=argparse.SUPPRESS, metavar=f.name.upper())


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return obj


def build_config(args: argparse.Namespace) -> RunConfig:
    known = {f.name: f for f in fields(RunConfig)}
    values: dict = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError("unknown config field(s): " + ", ".join(unknown))
    for name in known:
        if name in vars(args):
            values[name] = getattr(args, name)
    if values.get("k") is not None:
        values["k"] = str(values["k"])
    if "clip" in values:
        values["clip"] = "none" if values["clip"] is None else str(values["clip"])
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    for name, f in known.items():
        value = getattr(cfg, name)
        expected = _field_type(f)
        if value is not None and expected in (int, float) and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ConfigError(f"{name} must be numeric, got {value!r}")
        if value is not None and expected is int and isinstance(value, float):
            if not value.is_integer():
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            setattr(cfg, name, int(value))
    return cfg.validate()
