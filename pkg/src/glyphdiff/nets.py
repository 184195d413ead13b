"""Trainable noise predictors for both stages and their conditioning:
a convolutional encoder-decoder for the 4-channel raster state, an
encoder-only transformer with cross-attention over encoded raster guidance
for the M x D tensor state, and the learned look-up tables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .codec import tensor_dim


class VocabularyError(KeyError):
    """Lookup of a codepoint or font id outside the training vocabulary."""


class ShapeError(ValueError):
    """Input shape inconsistent with the model configuration."""


@dataclass(frozen=True)
class RasterNetConfig:
    resolution: int = 32
    in_channels: int = 4
    base_channels: int = 32
    channel_mults: tuple[int, ...] = (1, 2, 4)
    attn_resolutions: tuple[int, ...] = (16, 8)
    res_blocks: int = 1
    emb_dim: int = 64


@dataclass(frozen=True)
class VectorNetConfig:
    rows: int = 64
    grid: int = 16
    width: int = 128
    layers: int = 4
    heads: int = 4
    emb_dim: int = 64
    guidance_width: int = 128
    guidance_base: int = 32
    resolution: int = 32

    @property
    def dim(self) -> int:
        return tensor_dim(self.grid)

    @property
    def guidance_tokens(self) -> int:
        return (self.resolution // 4) ** 2


def _zero_module(module: nn.Module) -> nn.Module:
    for p in module.parameters():
        nn.init.zeros_(p)
    return module


def _group_norm(channels: int) -> nn.GroupNorm:
    for groups in (8, 4, 2, 1):
        if channels % groups == 0:
            return nn.GroupNorm(groups, channels)
    return nn.GroupNorm(1, channels)


# --- conditioning ------------------------------------------------------------


def sinusoidal_features(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Interleaved sin/cos position features of the timestep.

    feat[2i] = sin(t * w_i), feat[2i+1] = cos(t * w_i) with
    w_i = 10000^(-i / (dim/2)); at t = 0 this is [0, 1, 0, 1, ...].
    """
    if dim % 2 != 0:
        raise ValueError("feature dimension must be even")
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=t.dtype, device=t.device) / half
    )
    angles = t[:, None].to(freqs.dtype) * freqs[None, :]
    feat = torch.empty(t.shape[0], dim, dtype=freqs.dtype, device=t.device)
    feat[:, 0::2] = torch.sin(angles)
    feat[:, 1::2] = torch.cos(angles)
    return feat


class TimestepEmbedding(nn.Module):
    """Sinusoidal features passed through a 2-layer learnable map."""

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        self.net = nn.Sequential(nn.Linear(dim, dim), nn.SiLU(), nn.Linear(dim, dim))

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        w = self.net[0].weight
        return self.net(sinusoidal_features(t.to(w.dtype), self.dim))


class LookupTable(nn.Module):
    """Learnable embedding per vocabulary key; unknown keys always raise."""

    def __init__(self, keys: dict[str, int], dim: int):
        super().__init__()
        if sorted(keys.values()) != list(range(len(keys))):
            raise ValueError("vocabulary ids must be dense 0..V-1")
        self.vocab = dict(keys)
        self.table = nn.Embedding(len(keys), dim)

    def id_of(self, key: str) -> int:
        try:
            return self.vocab[key]
        except KeyError:
            raise VocabularyError(f"{key!r} is not in the training vocabulary") from None

    def embed(self, key: str) -> torch.Tensor:
        idx = torch.tensor([self.id_of(key)], device=self.table.weight.device)
        return self.table(idx)[0]

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        return self.table(ids)


def interpolate_font(table: LookupTable, font_a: str, font_b: str, alpha: float) -> torch.Tensor:
    """Linear interpolation between two font-style embedding rows."""
    return (1.0 - alpha) * table.embed(font_a) + alpha * table.embed(font_b)


# --- raster denoiser ----------------------------------------------------------


class ResBlock(nn.Module):
    """Residual conv block, optionally modulated by a conditioning vector."""

    def __init__(self, cin: int, cout: int, emb_dim: int | None):
        super().__init__()
        self.norm1 = _group_norm(cin)
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.emb_proj = nn.Linear(emb_dim, cout) if emb_dim else None
        self.norm2 = _group_norm(cout)
        self.conv2 = _zero_module(nn.Conv2d(cout, cout, 3, padding=1))
        self.skip = nn.Conv2d(cin, cout, 1) if cin != cout else nn.Identity()

    def forward(self, x: torch.Tensor, emb: torch.Tensor | None = None) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        if self.emb_proj is not None:
            h = h + self.emb_proj(F.silu(emb))[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return self.skip(x) + h


class Attention2d(nn.Module):
    """Spatial self-attention over the H*W positions of a feature map."""

    def __init__(self, channels: int, head_channels: int = 32):
        super().__init__()
        self.heads = max(1, channels // head_channels)
        self.norm = _group_norm(channels)
        self.qkv = nn.Conv2d(channels, channels * 3, 1)
        self.proj = _zero_module(nn.Conv2d(channels, channels, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        dh = c // self.heads
        q, k, v = self.qkv(self.norm(x)).reshape(b, 3, self.heads, dh, h * w).unbind(1)
        attn = torch.softmax(torch.einsum("bhdi,bhdj->bhij", q, k) / math.sqrt(dh), dim=-1)
        out = torch.einsum("bhij,bhdj->bhdi", attn, v).reshape(b, c, h, w)
        return x + self.proj(out)


class _Stage(nn.Module):
    """One UNet stage: optional ResBlock, optional attention, optional
    resolution change."""

    def __init__(self, res: nn.Module | None = None, attn: nn.Module | None = None,
                 resample: str | None = None, channels: int | None = None):
        super().__init__()
        self.res = res
        self.attn = attn
        self.resample = resample
        if resample == "down":
            self.conv = nn.Conv2d(channels, channels, 3, stride=2, padding=1)
        elif resample == "up":
            self.conv = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        if self.res is not None:
            x = self.res(x, emb)
        if self.attn is not None:
            x = self.attn(x)
        if self.resample == "down":
            x = self.conv(x)
        elif self.resample == "up":
            x = self.conv(F.interpolate(x, scale_factor=2.0, mode="nearest"))
        return x


class RasterDenoiser(nn.Module):
    """Encoder-decoder convnet with skip connections; each residual block is
    modulated by the summed timestep + codepoint + font embedding. The final
    layer is zero-initialized so the prediction is exactly 0 at init."""

    def __init__(self, cfg: RasterNetConfig):
        super().__init__()
        self.cfg = cfg
        base, emb = cfg.base_channels, cfg.emb_dim
        self.time_embed = TimestepEmbedding(emb)

        self.conv_in = nn.Conv2d(cfg.in_channels, base, 3, padding=1)
        self.downs = nn.ModuleList()
        skip_channels = [base]
        ch, res = base, cfg.resolution
        for i, mult in enumerate(cfg.channel_mults):
            for _ in range(cfg.res_blocks):
                stage = _Stage(
                    res=ResBlock(ch, base * mult, emb),
                    attn=Attention2d(base * mult) if res in cfg.attn_resolutions else None,
                )
                ch = base * mult
                self.downs.append(stage)
                skip_channels.append(ch)
            if i < len(cfg.channel_mults) - 1:
                self.downs.append(_Stage(resample="down", channels=ch))
                skip_channels.append(ch)
                res //= 2

        self.mid = nn.ModuleList(
            [ResBlock(ch, ch, emb), Attention2d(ch), ResBlock(ch, ch, emb)]
        )

        self.ups = nn.ModuleList()
        self.up_has_skip: list[bool] = []
        for i, mult in reversed(list(enumerate(cfg.channel_mults))):
            for _ in range(cfg.res_blocks + 1):
                stage = _Stage(
                    res=ResBlock(ch + skip_channels.pop(), base * mult, emb),
                    attn=Attention2d(base * mult) if res in cfg.attn_resolutions else None,
                )
                ch = base * mult
                self.ups.append(stage)
                self.up_has_skip.append(True)
            if i > 0:
                self.ups.append(_Stage(resample="up", channels=ch))
                self.up_has_skip.append(False)
                res *= 2
        assert not skip_channels

        self.norm_out = _group_norm(ch)
        self.conv_out = _zero_module(nn.Conv2d(ch, cfg.in_channels, 3, padding=1))

    def forward(self, x: torch.Tensor, t: torch.Tensor, g: torch.Tensor,
                f: torch.Tensor) -> torch.Tensor:
        cfg = self.cfg
        if x.shape[1:] != (cfg.in_channels, cfg.resolution, cfg.resolution):
            raise ShapeError(
                f"expected (B, {cfg.in_channels}, {cfg.resolution}, {cfg.resolution}), "
                f"got {tuple(x.shape)}"
            )
        emb = self.time_embed(t) + g + f
        h = self.conv_in(x)
        skips = [h]
        for stage in self.downs:
            h = stage(h, emb)
            skips.append(h)
        for block in self.mid:
            h = block(h, emb) if isinstance(block, ResBlock) else block(h)
        for stage, has_skip in zip(self.ups, self.up_has_skip):
            if has_skip:
                h = torch.cat([h, skips.pop()], dim=1)
            h = stage(h, emb)
        return self.conv_out(F.silu(self.norm_out(h)))


# --- guidance encoder ---------------------------------------------------------


class GuidanceEncoder(nn.Module):
    """Encodes the 4-channel raster target into a token sequence for
    cross-attention: two downsampling stages with self-attention, then a
    1x1 projection and a learned position embedding per token."""

    def __init__(self, cfg: VectorNetConfig):
        super().__init__()
        self.cfg = cfg
        base = cfg.guidance_base
        self.net = nn.ModuleList(
            [
                _Stage(res=ResBlock(4, base, None)),
                _Stage(resample="down", channels=base),
                _Stage(res=ResBlock(base, 2 * base, None), attn=Attention2d(2 * base)),
                _Stage(resample="down", channels=2 * base),
                _Stage(res=ResBlock(2 * base, 2 * base, None), attn=Attention2d(2 * base)),
            ]
        )
        self.norm = _group_norm(2 * base)
        self.proj = nn.Conv2d(2 * base, cfg.guidance_width, 1)
        self.pos = nn.Parameter(torch.zeros(cfg.guidance_tokens, cfg.guidance_width))

    def forward(self, x0: torch.Tensor) -> torch.Tensor:
        cfg = self.cfg
        if x0.shape[1:] != (4, cfg.resolution, cfg.resolution):
            raise ShapeError(
                f"expected (B, 4, {cfg.resolution}, {cfg.resolution}), got {tuple(x0.shape)}"
            )
        h = x0
        for stage in self.net:
            h = stage(h, None)
        h = self.proj(F.silu(self.norm(h)))  # (B, W, N/4, N/4)
        tokens = h.flatten(2).transpose(1, 2)  # row-major token order
        return tokens + self.pos[None]


# --- vector denoiser ------------------------------------------------------------


class _TransformerBlock(nn.Module):
    def __init__(self, width: int, heads: int, guidance_width: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(width)
        self.self_attn = nn.MultiheadAttention(width, heads, batch_first=True)
        self.ln2 = nn.LayerNorm(width)
        self.cross_attn = nn.MultiheadAttention(
            width, heads, kdim=guidance_width, vdim=guidance_width, batch_first=True
        )
        self.ln3 = nn.LayerNorm(width)
        self.mlp = nn.Sequential(
            nn.Linear(width, 4 * width), nn.GELU(), nn.Linear(4 * width, width)
        )
        _zero_module(self.self_attn.out_proj)
        _zero_module(self.cross_attn.out_proj)

    def forward(self, h: torch.Tensor, guidance: torch.Tensor) -> torch.Tensor:
        q = self.ln1(h)
        h = h + self.self_attn(q, q, q, need_weights=False)[0]
        h = h + self.cross_attn(self.ln2(h), guidance, guidance, need_weights=False)[0]
        return h + self.mlp(self.ln3(h))


class VectorDenoiser(nn.Module):
    """Pre-norm encoder-only transformer over the M tensor rows.

    Rows project to the model width, add learned row-position features and
    the timestep embedding, then pass through self-attention,
    cross-attention over the guidance tokens, and a feedforward block per
    layer; the output projection back to D is zero-initialized."""

    def __init__(self, cfg: VectorNetConfig):
        super().__init__()
        self.cfg = cfg
        self.in_proj = nn.Linear(cfg.dim, cfg.width)
        self.row_pos = nn.Parameter(torch.randn(cfg.rows, cfg.width) * 0.02)
        self.time_embed = TimestepEmbedding(cfg.emb_dim)
        self.time_proj = nn.Linear(cfg.emb_dim, cfg.width)
        self.blocks = nn.ModuleList(
            [
                _TransformerBlock(cfg.width, cfg.heads, cfg.guidance_width)
                for _ in range(cfg.layers)
            ]
        )
        self.ln_out = nn.LayerNorm(cfg.width)
        self.out_proj = _zero_module(nn.Linear(cfg.width, cfg.dim))

    def forward(self, y: torch.Tensor, t: torch.Tensor, guidance: torch.Tensor) -> torch.Tensor:
        cfg = self.cfg
        if y.shape[1:] != (cfg.rows, cfg.dim):
            raise ShapeError(f"expected (B, {cfg.rows}, {cfg.dim}), got {tuple(y.shape)}")
        if guidance.shape[1:] != (cfg.guidance_tokens, cfg.guidance_width):
            raise ShapeError(
                f"expected (B, {cfg.guidance_tokens}, {cfg.guidance_width}) guidance, "
                f"got {tuple(guidance.shape)}"
            )
        h = self.in_proj(y) + self.row_pos[None] + self.time_proj(self.time_embed(t))[:, None, :]
        for block in self.blocks:
            h = block(h, guidance)
        return self.out_proj(self.ln_out(h))
