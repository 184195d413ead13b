"""Shared fixtures and independent oracles used across the suite."""

from __future__ import annotations

import numpy as np
import pytest

from glyphdiff.glyphs import BezierPath, GlyphVector, canonicalize
from glyphdiff import corpus


def random_glyph(
    rng: np.random.Generator,
    max_paths: int = 7,
    rows: int = 256,
    dup_prob: float = 0.2,
) -> GlyphVector:
    """Random canonical glyph within codec capacity, with consecutive
    repeated points injected to exercise multiplicities."""
    n_paths = int(rng.integers(1, max_paths + 1))
    budget = rows // 3
    paths = []
    for i in range(n_paths):
        seg_cap = budget - (n_paths - i - 1)
        segs = int(rng.integers(1, min(seg_cap, 6) + 1))
        budget -= segs
        pts = rng.random((3 * segs, 2))
        j = 0
        while j < len(pts) - 1:
            if rng.random() < dup_prob:
                run = int(rng.integers(1, 3))
                for k in range(1, run + 1):
                    if j + k < len(pts):
                        pts[j + k] = pts[j]
                j += run
            j += 1
        paths.append(BezierPath(pts, path_index=i))
    return canonicalize(GlyphVector(tuple(paths)))


def chamfer_brute(a: np.ndarray, b: np.ndarray, scale: float = 64.0) -> float:
    """O(n^2) Chamfer oracle: explicit nearest-neighbor loops."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return float(np.sqrt(2.0) * scale)

    def mean_min(src, dst):
        total = 0.0
        for p in src:
            best = min(float(np.hypot(p[0] - q[0], p[1] - q[1])) for q in dst)
            total += best
        return total / len(src)

    return 0.5 * (mean_min(a, b) + mean_min(b, a)) * scale


def nearest_centroid_brute(point, grid: int) -> int:
    """Exhaustive nearest-centroid search; equidistant centroids resolve to
    the highest cell index (scan in index order, ties keep the later cell)."""
    x, y = float(point[0]), float(point[1])
    best_idx, best_d2 = -1, np.inf
    for idx in range(grid * grid):
        row, col = divmod(idx, grid)
        cx, cy = (col + 0.5) / grid, (row + 0.5) / grid
        d2 = (x - cx) ** 2 + (y - cy) ** 2
        if d2 <= best_d2:
            best_idx, best_d2 = idx, d2
    return best_idx


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> "Path":
    out = tmp_path_factory.mktemp("corpus")
    corpus.write_corpus(out)
    return out


@pytest.fixture(scope="session")
def corpus_glyphs():
    return corpus.build_corpus()
