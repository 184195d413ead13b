"""Cascaded raster-to-vector diffusion for cubic-Bezier glyph generation."""

from .glyphs import (
    BezierPath,
    GlyphVector,
    PathDataError,
    canonicalize,
    eval_cubic,
    glyph_to_svg,
    load_glyph_file,
    normalize_glyph,
    parse_svg_path,
)
from .raster import RasterTarget, compose_target, rasterize_glyph, render_control_point_field
from .codec import CapacityError, VectorTensor, decode_tensor, encode_glyph
from .diffusion import NoiseSchedule, cosine_schedule, ddpm_sample, eps_loss, q_sample
from .metrics import EvalReport, chamfer, cp_diff, glyph_metrics, l1_metric, vp_diff
from .config import TrainConfig, load_config
from .dataset import DatasetManifest, build_dataset, precompute_targets
from .training import train_raster, train_vector
from .sampling import GenRequest, evaluate_split, generate, load_raster_stage, load_vector_stage

__version__ = "0.1.0"

__all__ = [
    "BezierPath",
    "GlyphVector",
    "PathDataError",
    "canonicalize",
    "eval_cubic",
    "glyph_to_svg",
    "load_glyph_file",
    "normalize_glyph",
    "parse_svg_path",
    "RasterTarget",
    "compose_target",
    "rasterize_glyph",
    "render_control_point_field",
    "CapacityError",
    "VectorTensor",
    "decode_tensor",
    "encode_glyph",
    "NoiseSchedule",
    "cosine_schedule",
    "ddpm_sample",
    "eps_loss",
    "q_sample",
    "EvalReport",
    "chamfer",
    "cp_diff",
    "glyph_metrics",
    "l1_metric",
    "vp_diff",
    "TrainConfig",
    "load_config",
    "DatasetManifest",
    "build_dataset",
    "precompute_targets",
    "train_raster",
    "train_vector",
    "GenRequest",
    "evaluate_split",
    "generate",
    "load_raster_stage",
    "load_vector_stage",
    "__version__",
]
