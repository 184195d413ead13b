"""Procedurally generated toy glyph corpus: ~40 license-clean glyphs (20
shape recipes x 2 font styles) spanning 1-4 paths, curved and polygonal
outlines, holes, and repeated control points."""

from __future__ import annotations

import numpy as np
from pathlib import Path

from .glyphs import BezierPath, GlyphVector, canonicalize, write_glyph_file

ARC_K = 0.5522847498307936  # 4/3 tan(pi/8): cubic approximation of a quarter arc

CODEPOINTS = [chr(ord("A") + i) for i in range(20)]
FONTS = ("alpha", "beta")


def _poly(vertices: np.ndarray) -> np.ndarray:
    """Closed polygon as degree-elevated cubics (3 points per edge)."""
    pts = []
    k = len(vertices)
    for i in range(k):
        p, q = vertices[i], vertices[(i + 1) % k]
        pts.extend([p, p + (q - p) / 3.0, p + 2.0 * (q - p) / 3.0])
    return np.array(pts)


def _sharp_poly(vertices: np.ndarray) -> np.ndarray:
    """Polygon whose handles sit on the endpoints, giving each vertex a
    repeated control point (multiplicity 2, 3 at the seam)."""
    pts = []
    k = len(vertices)
    for i in range(k):
        p, q = vertices[i], vertices[(i + 1) % k]
        pts.extend([p, p, q])
    return np.array(pts)


def _circle(center, radius: float, reverse: bool = False) -> np.ndarray:
    cx, cy = center
    r, h = radius, radius * ARC_K
    anchors = [(cx + r, cy), (cx, cy + r), (cx - r, cy), (cx, cy - r)]
    handles = [
        ((cx + r, cy + h), (cx + h, cy + r)),
        ((cx - h, cy + r), (cx - r, cy + h)),
        ((cx - r, cy - h), (cx - h, cy - r)),
        ((cx + h, cy - r), (cx + r, cy - h)),
    ]
    pts = []
    for i in range(4):
        pts.append(anchors[i])
        pts.extend(handles[i])
    arr = np.array(pts, dtype=np.float64)
    return _reverse_path(arr) if reverse else arr


def _rect(x0: float, y0: float, x1: float, y1: float, reverse: bool = False) -> np.ndarray:
    arr = _poly(np.array([(x0, y0), (x1, y0), (x1, y1), (x0, y1)]))
    return _reverse_path(arr) if reverse else arr


def _reverse_path(pts: np.ndarray) -> np.ndarray:
    """Reverse traversal direction while keeping the same start point."""
    return np.roll(pts[::-1], 1, axis=0)


def _regular_polygon(center, radius: float, k: int, phase: float = 0.0) -> np.ndarray:
    ang = phase + 2.0 * np.pi * np.arange(k) / k
    return np.stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)], axis=1)


def _star(center, r_outer: float, r_inner: float, k: int = 5) -> np.ndarray:
    ang = -np.pi / 2 + np.pi * np.arange(2 * k) / k
    rad = np.where(np.arange(2 * k) % 2 == 0, r_outer, r_inner)
    return np.stack([center[0] + rad * np.cos(ang), center[1] + rad * np.sin(ang)], axis=1)


def _smooth_closed(anchors: np.ndarray, tension: float = 0.35) -> np.ndarray:
    """Smooth closed cubic through the anchors (Catmull-Rom style handles)."""
    k = len(anchors)
    pts = []
    for i in range(k):
        prev_a, a = anchors[i - 1], anchors[i]
        b, next_b = anchors[(i + 1) % k], anchors[(i + 2) % k]
        pts.append(a)
        pts.append(a + tension * (b - prev_a) / 2.0)
        pts.append(b - tension * (next_b - a) / 2.0)
    return np.array(pts)


def _rounded_square(center, half: float, corner: float) -> np.ndarray:
    """Axis-aligned square with quarter-arc corners: 8 segments."""
    cx, cy = center
    x0, x1 = cx - half, cx + half
    y0, y1 = cy - half, cy + half
    c, h = corner, corner * ARC_K
    pts = []

    def line(p, q):
        p, q = np.array(p), np.array(q)
        pts.extend([p, p + (q - p) / 3.0, p + 2.0 * (q - p) / 3.0])

    def arc(p, ctrl1, ctrl2):
        pts.extend([np.array(p), np.array(ctrl1), np.array(ctrl2)])

    line((x0 + c, y0), (x1 - c, y0))
    arc((x1 - c, y0), (x1 - c + h, y0), (x1, y0 + c - h))
    line((x1, y0 + c), (x1, y1 - c))
    arc((x1, y1 - c), (x1, y1 - c + h), (x1 - c + h, y1))
    line((x1 - c, y1), (x0 + c, y1))
    arc((x0 + c, y1), (x0 + c - h, y1), (x0, y1 - c + h))
    line((x0, y1 - c), (x0, y0 + c))
    arc((x0, y0 + c), (x0, y0 + c - h), (x0 + c - h, y0))
    return np.array(pts)


def _transform(paths: list[np.ndarray], scale: float, rot: float) -> list[np.ndarray]:
    center = np.array([0.5, 0.5])
    cos, sin = np.cos(rot), np.sin(rot)
    mat = np.array([[cos, -sin], [sin, cos]]) * scale
    return [(p - center) @ mat.T + center for p in paths]


def _recipes(font: str, rng: np.random.Generator) -> dict[str, list[np.ndarray]]:
    """Path arrays per codepoint, already inside [0,1]^2."""
    # style: beta is smaller and, for non-grid shapes, slightly rotated
    scale, rot = (1.0, 0.0) if font == "alpha" else (0.72, 0.35)
    g = (0.25, 0.75) if font == "alpha" else (0.375, 0.625)  # 1/8-grid square extents
    c = np.array([0.5, 0.5])

    def styled(*paths):
        return _transform(list(paths), scale, rot)

    shapes = {
        "A": styled(_poly(_regular_polygon(c, 0.34, 3, phase=-np.pi / 2))),
        "B": [_rect(g[0], g[0], g[1], g[1])],
        "C": styled(_poly(_regular_polygon(c, 0.36, 5, phase=-np.pi / 2))),
        "D": styled(_poly(_regular_polygon(c, 0.36, 6))),
        "E": styled(_poly(_regular_polygon(c, 0.38, 8, phase=np.pi / 8))),
        "F": styled(_circle(c, 0.33)),
        "G": styled(_circle(c, 0.38), _circle(c, 0.21, reverse=True)),
        "H": styled(_rect(0.18, 0.15, 0.42, 0.85), _rect(0.58, 0.15, 0.82, 0.85)),
        "I": styled(_rect(0.38, 0.12, 0.62, 0.62), _circle((0.5, 0.8), 0.1)),
        "J": styled(
            _circle((0.25, 0.5), 0.12), _circle((0.5, 0.5), 0.12), _circle((0.75, 0.5), 0.12)
        ),
        "K": styled(
            _sharp_poly(np.array([(0.5, 0.1), (0.9, 0.5), (0.5, 0.9), (0.1, 0.5)]))
        ),
        "L": styled(_poly(_star(c, 0.4, 0.17))),
        "M": styled(
            _smooth_closed(
                _regular_polygon(c, 0.3, 6)
                + rng.uniform(-0.06, 0.06, size=(6, 2))
            )
        ),
        "N": styled(
            _circle((0.42, 0.42), 0.3),
            _circle((0.42, 0.42), 0.16, reverse=True),
            _circle((0.82, 0.82), 0.09),
        ),
        "O": [_rect(g[0], g[0], g[1], g[1]), _rect(0.4375, 0.4375, 0.5625, 0.5625, reverse=True)],
        "P": styled(_rounded_square(c, 0.32, 0.14)),
        "Q": styled(_poly(np.array([(0.5, 0.12), (0.88, 0.5), (0.5, 0.88), (0.12, 0.5)]))),
        "R": styled(
            _poly(_regular_polygon(c, 0.35, 4, phase=np.pi / 4)),
            _circle(c, 0.13, reverse=True),
        ),
        "S": styled(
            _circle(c, 0.38), _circle(c, 0.24, reverse=True), _circle(c, 0.1)
        ),
        "T": [
            _rect(0.125, 0.125, 0.375, 0.375),
            _rect(0.625, 0.125, 0.875, 0.375),
            _rect(0.125, 0.625, 0.375, 0.875),
            _rect(0.625, 0.625, 0.875, 0.875),
        ],
    }
    return shapes


def build_corpus() -> list[GlyphVector]:
    """All corpus glyphs, normalized and canonicalized."""
    glyphs = []
    for font in FONTS:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(911, spawn_key=(FONTS.index(font),))))
        shapes = _recipes(font, rng)
        for codepoint in CODEPOINTS:
            paths = tuple(
                BezierPath(np.clip(p, 0.0, 1.0), path_index=i)
                for i, p in enumerate(shapes[codepoint])
            )
            glyphs.append(canonicalize(GlyphVector(paths, codepoint=codepoint, font_id=font)))
    return glyphs


def write_corpus(out_dir: Path | str) -> list[Path]:
    """Write the corpus as SVG + JSON sidecar files; deterministic."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for glyph in build_corpus():
        path = out_dir / f"{ord(glyph.codepoint):04X}_{glyph.font_id}.svg"
        write_glyph_file(glyph, path)
        written.append(path)
    return written


if __name__ == "__main__":
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else "corpus"
    files = write_corpus(target)
    print(f"wrote {len(files)} glyphs to {target}")
