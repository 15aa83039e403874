"""Run configuration: defaults, key=value config files, CLI overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .encoders import DEFAULT_PROMPTS

OUTPUT_ROOT_ENV = "LEAKSEG_OUTPUT_ROOT"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    resolution: tuple = (352, 352)
    batch_size: int = 6
    epochs: int = 60
    lr_initial: float = 1e-4
    lr_final: float = 1e-5
    lr_decay_start_fraction: float = 0.8
    clip_length: int = 3
    center_index: int = 1
    prompts: tuple = DEFAULT_PROMPTS
    seed: int = 0
    use_vlf: bool = True
    postproc: bool = True
    kernel: int = 9
    threshold: float = 0.5
    encoder: str = "reference"
    c_v: int = 32
    c_t: int = 64
    groups: int = 8
    decoder_width: int = 64
    validation_fraction: float = 0.1

    def validate(self) -> "RunConfig":
        if self.lr_final > self.lr_initial:
            raise ConfigError("lr_final must not exceed lr_initial")
        if not 0.0 < self.lr_decay_start_fraction < 1.0:
            raise ConfigError("lr_decay_start_fraction must lie in (0, 1)")
        if self.resolution[0] % 32 or self.resolution[1] % 32:
            raise ConfigError(f"resolution {self.resolution} must be divisible by 32")
        if not 0 <= self.center_index < self.clip_length:
            raise ConfigError("center_index must be valid for clip_length")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ConfigError("kernel must be odd and >= 1")
        return self

    def learning_rate(self, epoch: int) -> float:
        """Step schedule: the final fraction of epochs runs at lr_final.

        `epoch` is 1-based; with 60 epochs and fraction 0.8 the drop lands
        after epoch 48, so epoch 47 still uses lr_initial and epoch 49 uses
        lr_final.
        """
        boundary = self.lr_decay_start_fraction * self.epochs
        return self.lr_final if epoch > boundary else self.lr_initial


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "on": True,
               "false": False, "0": False, "no": False, "off": False}


def _parse_value(name: str, raw: str, current):
    raw = raw.strip()
    if isinstance(current, bool):
        if raw.lower() not in _BOOL_WORDS:
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
        return _BOOL_WORDS[raw.lower()]
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        if name == "prompts":
            return tuple(p.strip() for p in raw.split(";") if p.strip())
        return tuple(int(p) for p in raw.replace(",", " ").split() if p)
    return raw


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional key=value file plus overrides.

    File format: one `key = value` per line, '#' comments; resolution is
    two integers, prompts are ';'-separated strings.
    """
    cfg = RunConfig()
    values = {}
    if path is not None:
        known = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_value(key, raw, known[key])
    if overrides:
        for key, val in overrides.items():
            if val is not None:
                values[key] = val
    return replace(cfg, **values).validate()


def output_root() -> Path:
    """Directory that relative output paths resolve against."""
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


def resolve_out(path) -> Path:
    path = Path(path)
    return path if path.is_absolute() else output_root() / path
