"""Evaluation measures: raster L1, bidirectional Chamfer distance over
control points, and per-path control-point / path count differences."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .glyphs import GlyphVector, canonicalize
from .raster import rasterize_glyph

CHAMFER_PIXELS = 64  # Chamfer distances are reported in pixel units at 64x64


@dataclass(frozen=True)
class EvalReport:
    codepoint: str
    font_id: str
    l1: float
    cd: float
    cp_diff: float
    vp_diff: float
    error: str = ""


def l1_metric(pred: GlyphVector, gt: GlyphVector, resolution: int = 64) -> float:
    """Mean absolute pixel difference of the two rasterized glyphs."""
    a = rasterize_glyph(pred, resolution)
    b = rasterize_glyph(gt, resolution)
    return float(np.abs(a - b).mean())


def chamfer(pred_points: np.ndarray, gt_points: np.ndarray,
            scale: float = CHAMFER_PIXELS) -> float:
    """Symmetric mean-of-mins Chamfer distance between two point sets,
    scaled into pixel units.

    One empty side scores the canvas diagonal (worst case); both empty is 0.
    """
    pred_points = np.asarray(pred_points, dtype=np.float64).reshape(-1, 2)
    gt_points = np.asarray(gt_points, dtype=np.float64).reshape(-1, 2)
    if len(pred_points) == 0 and len(gt_points) == 0:
        return 0.0
    if len(pred_points) == 0 or len(gt_points) == 0:
        return float(math.sqrt(2.0) * scale)
    d_pred = cKDTree(gt_points).query(pred_points)[0]
    d_gt = cKDTree(pred_points).query(gt_points)[0]
    return float(0.5 * (d_pred.mean() + d_gt.mean()) * scale)


def cp_diff(pred: GlyphVector, gt: GlyphVector) -> float:
    """Mean per-path absolute control-point-count difference.

    Paths pair by canonical sorted index; unpaired paths contribute their
    full point count; the sum divides by max(gt path count, 1).
    """
    pred_counts = [len(p.points) for p in canonicalize(pred).paths]
    gt_counts = [len(p.points) for p in canonicalize(gt).paths]
    total = 0
    for i in range(max(len(pred_counts), len(gt_counts))):
        a = pred_counts[i] if i < len(pred_counts) else 0
        b = gt_counts[i] if i < len(gt_counts) else 0
        total += abs(a - b)
    return total / max(len(gt_counts), 1)


def vp_diff(pred: GlyphVector, gt: GlyphVector) -> float:
    """Absolute difference in path counts."""
    return float(abs(len(pred.paths) - len(gt.paths)))


def glyph_metrics(pred: GlyphVector, gt: GlyphVector, resolution: int = 64) -> EvalReport:
    return EvalReport(
        codepoint=gt.codepoint,
        font_id=gt.font_id,
        l1=l1_metric(pred, gt, resolution),
        cd=chamfer(pred.all_points(), gt.all_points()),
        cp_diff=cp_diff(pred, gt),
        vp_diff=vp_diff(pred, gt),
    )


def write_reports(reports: list[EvalReport], path: Path | str) -> None:
    """One CSV row per glyph plus an aggregate mean row over clean rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["codepoint", "font_id", "l1", "cd", "cp_diff", "vp_diff", "error"])
        for r in reports:
            writer.writerow(
                [r.codepoint, r.font_id, repr(r.l1), repr(r.cd),
                 repr(r.cp_diff), repr(r.vp_diff), r.error]
            )
        clean = [r for r in reports if not r.error]
        if clean:
            writer.writerow(
                [
                    "mean",
                    "",
                    repr(float(np.mean([r.l1 for r in clean]))),
                    repr(float(np.mean([r.cd for r in clean]))),
                    repr(float(np.mean([r.cp_diff for r in clean]))),
                    repr(float(np.mean([r.vp_diff for r in clean]))),
                    "",
                ]
            )
