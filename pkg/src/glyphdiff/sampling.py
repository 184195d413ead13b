"""End-to-end cascaded generation: sample the raster stage under character
and font conditioning, encode it as guidance, sample the vector stage, and
decode to an editable glyph; plus split evaluation against ground truth."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .checkpoint import FingerprintError, load_checkpoint
from .codec import VectorTensor, decode_tensor
from .config import TrainConfig, config_from_dict
from .dataset import DatasetManifest
from .diffusion import (
    RASTER_STREAM,
    VECTOR_STREAM,
    StreamBatch,
    cosine_schedule,
    ddpm_sample,
    noise_stream,
)
from .glyphs import GlyphVector, glyph_to_svg, load_glyph_file
from .metrics import EvalReport, glyph_metrics, write_reports
from .nets import GuidanceEncoder, LookupTable, RasterDenoiser, VectorDenoiser, interpolate_font
from .raster import RasterTarget, export_debug_png
from .training import (
    build_raster_models,
    build_vector_models,
    load_module_params,
)

log = logging.getLogger(__name__)


@dataclass
class RasterStage:
    config: TrainConfig
    denoiser: RasterDenoiser
    codepoints: LookupTable
    fonts: LookupTable


@dataclass
class VectorStage:
    config: TrainConfig
    denoiser: VectorDenoiser
    guidance: GuidanceEncoder


@dataclass(frozen=True)
class GenRequest:
    codepoint: str
    font_id: str
    font2: str | None = None
    alpha: float = 0.0


def load_raster_stage(path: Path | str) -> RasterStage:
    ckpt = load_checkpoint(path)
    config = config_from_dict(ckpt.config)
    if config.stage != "raster":
        raise ValueError(f"{path} is a {config.stage!r} checkpoint, expected raster")
    denoiser, cp_table, font_table = build_raster_models(
        config, ckpt.vocab["codepoint"], ckpt.vocab["font"]
    )
    load_module_params(denoiser, ckpt.params, "denoiser")
    load_module_params(cp_table, ckpt.params, "codepoints")
    load_module_params(font_table, ckpt.params, "fonts")
    denoiser.eval()
    return RasterStage(config, denoiser, cp_table, font_table)


def load_vector_stage(path: Path | str) -> VectorStage:
    ckpt = load_checkpoint(path)
    config = config_from_dict(ckpt.config)
    if config.stage != "vector":
        raise ValueError(f"{path} is a {config.stage!r} checkpoint, expected vector")
    denoiser, guidance = build_vector_models(config)
    load_module_params(denoiser, ckpt.params, "denoiser")
    load_module_params(guidance, ckpt.params, "guidance")
    denoiser.eval()
    guidance.eval()
    return VectorStage(config, denoiser, guidance)


def check_stage_compatibility(raster: RasterStage, vector: VectorStage) -> None:
    if raster.config.resolution != vector.config.resolution:
        raise FingerprintError(
            f"stage resolutions differ: raster N={raster.config.resolution}, "
            f"vector N={vector.config.resolution}"
        )


def _font_embedding(stage: RasterStage, request: GenRequest) -> torch.Tensor:
    if request.font2 is None:
        return stage.fonts.embed(request.font_id)
    return interpolate_font(stage.fonts, request.font_id, request.font2, request.alpha)


def generate_batch(
    raster_stage: RasterStage,
    vector_stage: VectorStage,
    requests: list[GenRequest],
    seed: int,
) -> tuple[list[GlyphVector], np.ndarray]:
    """Sample every request through both stages.

    Noise streams split per (request index, stage), so a batch reproduces
    the same bytes as one-at-a-time generation with the same indices.
    Returns the decoded glyphs and the sampled raster targets (B, 4, N, N)
    in [0, 1].
    """
    check_stage_compatibility(raster_stage, vector_stage)
    batch = len(requests)
    n = raster_stage.config.resolution

    with torch.no_grad():
        g = torch.stack([raster_stage.codepoints.embed(r.codepoint) for r in requests])
        f = torch.stack([_font_embedding(raster_stage, r) for r in requests])

        def raster_denoiser(x, t, _cond):
            xt = torch.from_numpy(x.astype(np.float32))
            tt = torch.full((batch,), t, dtype=torch.long)
            return raster_stage.denoiser(xt, tt, g, f).double().numpy()

        schedule_r = cosine_schedule(raster_stage.config.steps_t)
        streams = StreamBatch([noise_stream(seed, k, RASTER_STREAM) for k in range(batch)])
        x = ddpm_sample(raster_denoiser, None, schedule_r, streams, (batch, 4, n, n))
        x0 = np.clip((x + 1.0) / 2.0, 0.0, 1.0)  # back from [-1, 1] diffusion range

        guidance_in = x0.copy()
        if vector_stage.config.zero_cp_fields:
            guidance_in[:, 1:] = 0.0
        tokens = vector_stage.guidance(torch.from_numpy(guidance_in.astype(np.float32)))

        def vector_denoiser(y, t, _cond):
            yt = torch.from_numpy(y.astype(np.float32))
            tt = torch.full((batch,), t, dtype=torch.long)
            return vector_stage.denoiser(yt, tt, tokens).double().numpy()

        schedule_v = cosine_schedule(vector_stage.config.steps_t)
        streams = StreamBatch([noise_stream(seed, k, VECTOR_STREAM) for k in range(batch)])
        y = ddpm_sample(
            vector_denoiser, None, schedule_v, streams,
            (batch, vector_stage.config.rows, vector_stage.config.dim),
        )

    glyphs = [
        decode_tensor(
            VectorTensor(y[k], grid=vector_stage.config.grid),
            codepoint=requests[k].codepoint,
            font_id=requests[k].font_id,
        )
        for k in range(batch)
    ]
    return glyphs, x0


def generate(
    raster_stage: RasterStage,
    vector_stage: VectorStage,
    request: GenRequest,
    seed: int,
    out_svg: Path | str | None = None,
    debug_png_prefix: Path | str | None = None,
) -> GlyphVector:
    """Generate one glyph; optionally write the SVG and debug PNG renders."""
    glyphs, x0 = generate_batch(raster_stage, vector_stage, [request], seed)
    if out_svg is not None:
        Path(out_svg).write_text(glyph_to_svg(glyphs[0]))
    if debug_png_prefix is not None:
        export_debug_png(RasterTarget(x0[0]), debug_png_prefix)
    return glyphs[0]


def evaluate_split(
    manifest: DatasetManifest,
    raster_stage: RasterStage,
    vector_stage: VectorStage,
    split: str,
    seed: int,
    out_csv: Path | str | None = None,
    resolution: int = 64,
) -> list[EvalReport]:
    """Generate each (codepoint, font) of a split once and score it against
    the artist glyph; per-glyph failures become error rows, not aborts."""
    entries = manifest.split(split)
    if not entries:
        raise ValueError(f"manifest has no '{split}' entries")
    requests = [GenRequest(e.codepoint, e.font_id) for e in entries]
    glyphs, _ = generate_batch(raster_stage, vector_stage, requests, seed)
    reports: list[EvalReport] = []
    for entry, pred in zip(entries, glyphs):
        try:
            gt = load_glyph_file(entry.path)
            reports.append(glyph_metrics(pred, gt, resolution))
        except Exception as exc:  # keep scoring the rest
            log.warning("evaluation failed for %s/%s: %s", entry.codepoint, entry.font_id, exc)
            reports.append(
                EvalReport(entry.codepoint, entry.font_id,
                           float("nan"), float("nan"), float("nan"), float("nan"),
                           error=str(exc))
            )
    if out_csv is not None:
        write_reports(reports, out_csv)
    return reports
