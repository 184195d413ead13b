"""Seeded training loops for the two stages. Both optimize the
noise-prediction MSE with decoupled weight decay; the vector stage trains
its denoiser jointly with the guidance encoder on ground-truth raster
targets (teacher guidance)."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .checkpoint import Checkpoint, save_checkpoint
from .config import TrainConfig
from .dataset import DatasetManifest, check_target_headers
from .diffusion import TRAIN_STREAM, cosine_schedule, noise_stream
from .nets import (
    GuidanceEncoder,
    LookupTable,
    RasterDenoiser,
    RasterNetConfig,
    VectorDenoiser,
    VectorNetConfig,
)
from .raster import load_raster
from .codec import load_tensor

log = logging.getLogger(__name__)


def raster_net_config(cfg: TrainConfig) -> RasterNetConfig:
    return RasterNetConfig(
        resolution=cfg.resolution,
        base_channels=cfg.raster_base,
        channel_mults=cfg.raster_mults,
        attn_resolutions=cfg.raster_attn,
        res_blocks=cfg.raster_res_blocks,
        emb_dim=cfg.emb_dim,
    )


def vector_net_config(cfg: TrainConfig) -> VectorNetConfig:
    return VectorNetConfig(
        rows=cfg.rows,
        grid=cfg.grid,
        width=cfg.vec_width,
        layers=cfg.vec_layers,
        heads=cfg.vec_heads,
        emb_dim=cfg.emb_dim,
        guidance_width=cfg.guidance_width,
        guidance_base=cfg.guidance_base,
        resolution=cfg.resolution,
    )


def build_raster_models(
    config: TrainConfig, codepoint_vocab: dict[str, int], font_vocab: dict[str, int]
) -> tuple[RasterDenoiser, LookupTable, LookupTable]:
    torch.manual_seed(config.seed)
    denoiser = RasterDenoiser(raster_net_config(config))
    codepoints = LookupTable(codepoint_vocab, config.emb_dim)
    fonts = LookupTable(font_vocab, config.emb_dim)
    return denoiser, codepoints, fonts


def build_vector_models(config: TrainConfig) -> tuple[VectorDenoiser, GuidanceEncoder]:
    torch.manual_seed(config.seed)
    cfg = vector_net_config(config)
    return VectorDenoiser(cfg), GuidanceEncoder(cfg)


def _named_params(parts: dict[str, torch.nn.Module]) -> dict[str, np.ndarray]:
    out = {}
    for prefix, module in parts.items():
        for name, tensor in module.state_dict().items():
            out[f"{prefix}.{name}"] = tensor.detach().cpu().numpy().astype(np.float32)
    return out


def load_module_params(module: torch.nn.Module, params: dict[str, np.ndarray], prefix: str) -> None:
    state = {
        name[len(prefix) + 1 :]: torch.from_numpy(np.ascontiguousarray(arr))
        for name, arr in params.items()
        if name.startswith(prefix + ".")
    }
    module.load_state_dict(state, strict=True)


@dataclass
class TrainResult:
    checkpoint_path: Path
    losses: np.ndarray


class _LossTracker:
    def __init__(self, window: int):
        self.window = deque(maxlen=window)
        self.history: list[float] = []

    def push(self, value: float) -> float:
        self.window.append(value)
        self.history.append(value)
        return float(np.mean(self.window))


def _write_loss_log(losses: list[float], window: int, path: Path) -> None:
    lines = ["step,loss,smoothed"]
    buf: deque = deque(maxlen=window)
    for i, v in enumerate(losses, start=1):
        buf.append(v)
        lines.append(f"{i},{v!r},{float(np.mean(buf))!r}")
    path.write_text("\n".join(lines) + "\n")


def _load_split(manifest: DatasetManifest, targets_dir: Path, split: str):
    entries = manifest.split(split)
    if not entries:
        raise ValueError(f"manifest has no '{split}' entries")
    rasters = np.stack(
        [load_raster(targets_dir / f"{e.stem}.raster.bin").channels for e in entries]
    ).astype(np.float32)
    tensors = np.stack(
        [load_tensor(targets_dir / f"{e.stem}.tensor.bin").data for e in entries]
    ).astype(np.float32)
    cp_ids = np.array([manifest.codepoint_vocab[e.codepoint] for e in entries])
    font_ids = np.array([manifest.font_vocab[e.font_id] for e in entries])
    return rasters, tensors, cp_ids, font_ids


def _vocab_of(manifest: DatasetManifest) -> dict[str, dict[str, int]]:
    return {"codepoint": dict(manifest.codepoint_vocab), "font": dict(manifest.font_vocab)}


def train_raster(
    manifest: DatasetManifest,
    config: TrainConfig,
    targets_dir: Path | str,
    out_dir: Path | str,
) -> TrainResult:
    """Optimize the raster denoiser jointly with both look-up tables."""
    if config.stage != "raster":
        raise ValueError(f"config stage is {config.stage!r}, expected 'raster'")
    targets_dir, out_dir = Path(targets_dir), Path(out_dir)
    check_target_headers(manifest, config, targets_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rasters, _, cp_ids, font_ids = _load_split(manifest, targets_dir, "train")
    x0_all = rasters * 2.0 - 1.0  # diffuse in [-1, 1] to match unit-Gaussian noise

    denoiser, cp_table, font_table = build_raster_models(
        config, manifest.codepoint_vocab, manifest.font_vocab
    )
    params = (
        list(denoiser.parameters())
        + list(cp_table.parameters())
        + list(font_table.parameters())
    )
    opt = torch.optim.AdamW(params, lr=config.lr, weight_decay=config.weight_decay)
    schedule = cosine_schedule(config.steps_t)
    rng = noise_stream(config.seed, TRAIN_STREAM, 0)
    tracker = _LossTracker(config.loss_window)

    def save(path: Path) -> None:
        ckpt = Checkpoint(
            config=config.as_dict(),
            params=_named_params(
                {"denoiser": denoiser, "codepoints": cp_table, "fonts": font_table}
            ),
            vocab=_vocab_of(manifest),
        )
        save_checkpoint(ckpt, path)

    n = len(x0_all)
    for step in range(1, config.train_steps + 1):
        idx = rng.integers(0, n, size=config.batch_size)
        t = rng.integers(1, config.steps_t + 1, size=config.batch_size)
        eps = rng.standard_normal((config.batch_size, 4, config.resolution, config.resolution))
        ab = schedule.alpha_bar[t - 1][:, None, None, None]
        xt = np.sqrt(ab) * x0_all[idx] + np.sqrt(1.0 - ab) * eps

        pred = denoiser(
            torch.from_numpy(xt.astype(np.float32)),
            torch.from_numpy(t),
            cp_table(torch.from_numpy(cp_ids[idx])),
            font_table(torch.from_numpy(font_ids[idx])),
        )
        loss = torch.mean((pred - torch.from_numpy(eps.astype(np.float32))) ** 2)
        opt.zero_grad()
        loss.backward()
        opt.step()

        smoothed = tracker.push(float(loss.detach()))
        if step % config.log_every == 0 or step == config.train_steps:
            log.info("raster step %d/%d loss %.4f smoothed %.4f",
                     step, config.train_steps, tracker.history[-1], smoothed)
        if config.ckpt_every and step % config.ckpt_every == 0:
            save(out_dir / f"raster_step{step:06d}.ckpt")

    final = out_dir / "raster.ckpt"
    save(final)
    _write_loss_log(tracker.history, config.loss_window, out_dir / "raster_loss.csv")
    return TrainResult(final, np.asarray(tracker.history))


def train_vector(
    manifest: DatasetManifest,
    config: TrainConfig,
    targets_dir: Path | str,
    out_dir: Path | str,
) -> TrainResult:
    """Optimize the vector denoiser jointly with the guidance encoder,
    conditioned on stored ground-truth raster targets."""
    if config.stage != "vector":
        raise ValueError(f"config stage is {config.stage!r}, expected 'vector'")
    targets_dir, out_dir = Path(targets_dir), Path(out_dir)
    check_target_headers(manifest, config, targets_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rasters, tensors, _, _ = _load_split(manifest, targets_dir, "train")
    if config.zero_cp_fields:
        rasters = rasters.copy()
        rasters[:, 1:] = 0.0

    denoiser, guidance = build_vector_models(config)
    params = list(denoiser.parameters()) + list(guidance.parameters())
    opt = torch.optim.AdamW(params, lr=config.lr, weight_decay=config.weight_decay)
    schedule = cosine_schedule(config.steps_t)
    rng = noise_stream(config.seed, TRAIN_STREAM, 1)
    tracker = _LossTracker(config.loss_window)

    def save(path: Path) -> None:
        ckpt = Checkpoint(
            config=config.as_dict(),
            params=_named_params({"denoiser": denoiser, "guidance": guidance}),
            vocab=_vocab_of(manifest),
        )
        save_checkpoint(ckpt, path)

    n = len(tensors)
    for step in range(1, config.train_steps + 1):
        idx = rng.integers(0, n, size=config.batch_size)
        t = rng.integers(1, config.steps_t + 1, size=config.batch_size)
        eps = rng.standard_normal((config.batch_size, config.rows, config.dim))
        ab = schedule.alpha_bar[t - 1][:, None, None]
        yt = np.sqrt(ab) * tensors[idx] + np.sqrt(1.0 - ab) * eps

        tokens = guidance(torch.from_numpy(rasters[idx]))
        pred = denoiser(
            torch.from_numpy(yt.astype(np.float32)), torch.from_numpy(t), tokens
        )
        loss = torch.mean((pred - torch.from_numpy(eps.astype(np.float32))) ** 2)
        opt.zero_grad()
        loss.backward()
        opt.step()

        smoothed = tracker.push(float(loss.detach()))
        if step % config.log_every == 0 or step == config.train_steps:
            log.info("vector step %d/%d loss %.4f smoothed %.4f",
                     step, config.train_steps, tracker.history[-1], smoothed)
        if config.ckpt_every and step % config.ckpt_every == 0:
            save(out_dir / f"vector_step{step:06d}.ckpt")

    final = out_dir / "vector.ckpt"
    save(final)
    _write_loss_log(tracker.history, config.loss_window, out_dir / "vector_loss.csv")
    return TrainResult(final, np.asarray(tracker.history))
