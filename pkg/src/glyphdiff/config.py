"""Run configuration: one versioned key-value text file drives a training
stage; codec constants baked into stored artifacts are checked against it
before anything trains or samples."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .codec import tensor_dim

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class TrainConfig:
    stage: str = "raster"            # "raster" | "vector"
    config_version: int = CONFIG_VERSION
    # diffusion + codec constants
    steps_t: int = 256               # diffusion steps T
    resolution: int = 32             # raster resolution N
    rows: int = 64                   # tensor rows M
    grid: int = 16                   # grid cells per axis P
    # model dimensions
    emb_dim: int = 64
    raster_base: int = 32
    raster_mults: tuple[int, ...] = (1, 2, 4)
    raster_attn: tuple[int, ...] = (16, 8)
    raster_res_blocks: int = 1
    vec_width: int = 128
    vec_layers: int = 4
    vec_heads: int = 4
    guidance_width: int = 128
    guidance_base: int = 32
    # optimization
    lr: float = 1e-4
    weight_decay: float = 0.0
    batch_size: int = 32
    train_steps: int = 2000
    # bookkeeping
    ckpt_every: int = 500
    loss_window: int = 100
    log_every: int = 50
    zero_cp_fields: bool = False     # ablation: blank the field channels of guidance
    seed: int = 0

    def __post_init__(self) -> None:
        if self.stage not in ("raster", "vector"):
            raise ConfigError(f"stage must be 'raster' or 'vector', got {self.stage!r}")
        if self.config_version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config_version {self.config_version}")
        if self.resolution % 4 != 0:
            raise ConfigError("resolution must be divisible by 4 (guidance encoder)")

    @property
    def dim(self) -> int:
        """Tensor row width D, derived from the grid size."""
        return tensor_dim(self.grid)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["raster_mults"] = list(self.raster_mults)
        d["raster_attn"] = list(self.raster_attn)
        return d


def _parse_value(text: str, kind):
    if kind is bool:
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected a boolean, got {text!r}")
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    if kind is str:
        return text
    # tuple[int, ...] fields use comma-separated integers
    return tuple(int(v) for v in text.split(",") if v.strip())


def load_config(path: Path | str) -> TrainConfig:
    """Parse a `key = value` text file (# starts a comment)."""
    known = {f.name: f.type for f in fields(TrainConfig)}
    kinds = {
        "stage": str,
        "raster_mults": tuple,
        "raster_attn": tuple,
        "lr": float,
        "weight_decay": float,
        "zero_cp_fields": bool,
    }
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _parse_value(raw, kinds.get(key, int))
    try:
        return TrainConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def save_config(config: TrainConfig, path: Path | str) -> None:
    lines = []
    for key, value in config.as_dict().items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def config_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    for key in ("raster_mults", "raster_attn"):
        if key in d:
            d[key] = tuple(d[key])
    return TrainConfig(**d)
