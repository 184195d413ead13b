"""Vector glyph data model: closed cubic-Bezier paths, SVG path ingestion,
normalization to the unit square, and the canonical path ordering every
downstream encoder depends on."""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

Bbox = tuple[float, float, float, float]

UNIT_BBOX: Bbox = (0.0, 0.0, 1.0, 1.0)


class PathDataError(ValueError):
    """SVG path data that this toolkit rejects (unsupported command,
    unclosed subpath, malformed numbers, degenerate canvas)."""


@dataclass(frozen=True, eq=False)
class BezierPath:
    """A closed cubic Bezier path storing 3*s control points for s segments.

    Segment i consumes points (3i, 3i+1, 3i+2, 3(i+1) mod n): the final
    segment returns to point 0 implicitly, so closed outlines carry no
    duplicated endpoint. Consecutive repeated points are legal and
    meaningful (they lower continuity at corners).
    """

    points: np.ndarray
    path_index: int = 0

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"control points must be (n, 2), got {pts.shape}")
        n = len(pts)
        if n < 3 or n % 3 != 0:
            raise ValueError(f"closed cubic path needs 3s points with s >= 1, got {n}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite control point coordinate")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def num_segments(self) -> int:
        return len(self.points) // 3

    def segment(self, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Control quad (p0, c1, c2, p3) of segment i; p3 wraps to point 0."""
        pts = self.points
        n = len(pts)
        k = 3 * i
        return pts[k], pts[k + 1], pts[k + 2], pts[(k + 3) % n]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BezierPath):
            return NotImplemented
        return self.path_index == other.path_index and np.array_equal(
            self.points, other.points
        )


@dataclass(frozen=True, eq=False)
class GlyphVector:
    """An ordered list of closed Bezier paths plus its character identity."""

    paths: tuple[BezierPath, ...]
    codepoint: str = ""
    font_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "paths", tuple(self.paths))

    @property
    def total_points(self) -> int:
        return sum(len(p.points) for p in self.paths)

    def all_points(self) -> np.ndarray:
        """All control points concatenated in path order, shape (k, 2)."""
        if not self.paths:
            return np.zeros((0, 2))
        return np.concatenate([p.points for p in self.paths], axis=0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GlyphVector):
            return NotImplemented
        return (
            self.codepoint == other.codepoint
            and self.font_id == other.font_id
            and len(self.paths) == len(other.paths)
            and all(a == b for a, b in zip(self.paths, other.paths))
        )


def eval_cubic(p0, c1, c2, p3, t):
    """Evaluate the cubic Bernstein form at parameter t (scalar or array).

    Returns (1-t)^3 p0 + 3(1-t)^2 t c1 + 3(1-t) t^2 c2 + t^3 p3.
    """
    p0, c1, c2, p3 = (np.asarray(p, dtype=np.float64) for p in (p0, c1, c2, p3))
    t = np.asarray(t, dtype=np.float64)[..., None]
    u = 1.0 - t
    return u**3 * p0 + 3.0 * u**2 * t * c1 + 3.0 * u * t**2 * c2 + t**3 * p3


# --- SVG path data parsing ----------------------------------------------

_TOKEN = re.compile(r"[A-Za-z]|[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")
_SUPPORTED = set("MmLlCcQqZz")


def _tokenize(d: str) -> list[str]:
    tokens = []
    pos = 0
    for m in _TOKEN.finditer(d):
        gap = d[pos : m.start()]
        if gap.strip(" \t\r\n,"):
            raise PathDataError(f"unrecognized path data near {gap.strip()!r}")
        tokens.append(m.group(0))
        pos = m.end()
    if d[pos:].strip(" \t\r\n,"):
        raise PathDataError(f"unrecognized path data near {d[pos:].strip()!r}")
    return tokens


class _PathReader:
    def __init__(self, d: str):
        self.tokens = _tokenize(d)
        self.i = 0

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    def peek_is_number(self) -> bool:
        return not self.done() and not self.tokens[self.i].isalpha()

    def command(self) -> str:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def number(self) -> float:
        if self.done() or self.tokens[self.i].isalpha():
            raise PathDataError("expected a coordinate value")
        tok = self.tokens[self.i]
        self.i += 1
        return float(tok)

    def pair(self) -> np.ndarray:
        return np.array([self.number(), self.number()])


def _parse_subpaths(d: str) -> list[np.ndarray]:
    """Parse one "d" string into raw closed point arrays (3s points each).

    Supports absolute and relative M/L/C/Q/Z; lines and quadratics are
    exactly degree-elevated to cubics. Every subpath must end with Z.
    """
    reader = _PathReader(d)
    subpaths: list[np.ndarray] = []
    segs: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    start = pos = None
    cmd = None

    def close_subpath():
        nonlocal segs, start, pos
        if not segs:
            raise PathDataError("empty subpath (Z without any segments)")
        if not np.array_equal(pos, start):
            segs.append(_line_segment(pos, start))
        pts = [start]
        for c1, c2, end in segs:
            pts.extend([c1, c2, end])
        arr = np.array(pts[:-1])  # final endpoint equals the start; closure is implicit
        subpaths.append(arr)
        segs = []
        start = pos = None

    while not reader.done():
        if reader.peek_is_number():
            if cmd is None:
                raise PathDataError("path data must start with a move command")
            # implicit command repetition; repeated M coordinates become lines
            if cmd == "M":
                cmd = "L"
            elif cmd == "m":
                cmd = "l"
        else:
            cmd = reader.command()
            if cmd not in _SUPPORTED:
                raise PathDataError(f"unsupported command {cmd!r}")

        rel = cmd.islower()
        op = cmd.upper()
        if op == "M":
            if start is not None:
                raise PathDataError("unclosed subpath (new move before Z)")
            p = reader.pair()
            if rel and pos is not None:
                p = pos + p
            start = pos = p
        elif op == "Z":
            if start is None:
                raise PathDataError("Z without an open subpath")
            close_subpath()
        else:
            if start is None:
                raise PathDataError(f"{cmd!r} before any move command")
            if op == "L":
                end = reader.pair()
                if rel:
                    end = pos + end
                segs.append(_line_segment(pos, end))
            elif op == "C":
                c1, c2, end = reader.pair(), reader.pair(), reader.pair()
                if rel:
                    c1, c2, end = pos + c1, pos + c2, pos + end
                segs.append((c1, c2, end))
            elif op == "Q":
                q, end = reader.pair(), reader.pair()
                if rel:
                    q, end = pos + q, pos + end
                # exact quadratic-to-cubic elevation
                c1 = pos + (2.0 / 3.0) * (q - pos)
                c2 = end + (2.0 / 3.0) * (q - end)
                segs.append((c1, c2, end))
            pos = segs[-1][2]

    if start is not None:
        raise PathDataError("unclosed subpath (path data ended before Z)")
    return subpaths


def _line_segment(p: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # exact degree elevation: interior points at thirds of the chord
    return p + (q - p) / 3.0, p + 2.0 * (q - p) / 3.0, q


# --- normalization -------------------------------------------------------


def _fit_transform(bbox: Bbox) -> tuple[float, np.ndarray, np.ndarray]:
    x0, y0, x1, y1 = (float(v) for v in bbox)
    w, h = x1 - x0, y1 - y0
    if w <= 0.0 or h <= 0.0:
        raise PathDataError(f"degenerate bounding box {bbox}")
    s = 1.0 / max(w, h)
    offset = np.array([(1.0 - w * s) / 2.0, (1.0 - h * s) / 2.0])
    return s, np.array([x0, y0]), offset


def _normalize_points(pts: np.ndarray, bbox: Bbox) -> np.ndarray:
    s, origin, offset = _fit_transform(bbox)
    return np.clip((pts - origin) * s + offset, 0.0, 1.0)


def normalize_glyph(glyph: GlyphVector, bbox: Bbox) -> GlyphVector:
    """Map raw coordinates into [0,1]^2 with a uniform (aspect-preserving)
    scale, centered on the shorter axis."""
    paths = tuple(
        replace(p, points=_normalize_points(p.points, bbox)) for p in glyph.paths
    )
    return replace(glyph, paths=paths)


def parse_svg_path(
    path_data: str, canvas: Bbox, codepoint: str = "", font_id: str = ""
) -> GlyphVector:
    """Parse an SVG "d" string (M/L/C/Q/Z subset) into a normalized glyph.

    Coordinates are mapped from `canvas` into [0,1]^2; y grows downward in
    both spaces, so (0,0) is the raster top-left corner.
    """
    raw = _parse_subpaths(path_data)
    paths = tuple(
        BezierPath(_normalize_points(p, canvas), path_index=i)
        for i, p in enumerate(raw)
    )
    return GlyphVector(paths, codepoint=codepoint, font_id=font_id)


# --- canonical ordering --------------------------------------------------


def _path_sort_key(path: BezierPath):
    """(y, x)-lexicographic key starting at the control point closest to the
    top-left corner; full rotated sequence breaks ties, then the stored
    sequence, so equal-content paths order deterministically."""
    pts = path.points
    d2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    rotated = np.roll(pts, -int(np.argmin(d2)), axis=0)
    return (
        tuple(map(float, rotated[:, ::-1].ravel())),
        tuple(map(float, pts[:, ::-1].ravel())),
    )


def canonicalize(glyph: GlyphVector) -> GlyphVector:
    """Reorder paths deterministically and reassign dense path indices.

    Paths sort lexicographically by the (y, x) coordinates of the control
    point nearest (Euclidean) to the image top-left corner (0,0);
    within-path point order is preserved.
    """
    order = sorted(range(len(glyph.paths)), key=lambda k: _path_sort_key(glyph.paths[k]))
    paths = tuple(
        replace(glyph.paths[k], path_index=j) for j, k in enumerate(order)
    )
    return replace(glyph, paths=paths)


# --- SVG serialization and glyph files ------------------------------------


def path_to_d(path: BezierPath) -> str:
    """Cubic-only "d" string; coordinates use shortest round-trip decimals."""
    pts = path.points
    n = len(pts)
    parts = [f"M {float(pts[0][0])!r} {float(pts[0][1])!r}"]
    for i in range(path.num_segments):
        c1, c2 = pts[3 * i + 1], pts[3 * i + 2]
        p3 = pts[(3 * i + 3) % n]
        coords = " ".join(f"{float(v)!r}" for v in (*c1, *c2, *p3))
        parts.append(f"C {coords}")
    parts.append("Z")
    return " ".join(parts)


def glyph_to_svg(glyph: GlyphVector) -> str:
    """SVG document on a unit viewBox with one path element per BezierPath."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1">',
    ]
    for p in glyph.paths:
        lines.append(f'  <path d="{path_to_d(p)}" fill="black" fill-rule="nonzero"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def svg_path_data(svg_text: str) -> list[str]:
    """All path "d" attributes of an SVG document, in document order."""
    root = ET.fromstring(svg_text)
    out = []
    for el in root.iter():
        if el.tag.rsplit("}", 1)[-1] == "path" and "d" in el.attrib:
            out.append(el.attrib["d"])
    return out


def parse_svg_document(
    svg_text: str, canvas: Bbox, codepoint: str = "", font_id: str = ""
) -> GlyphVector:
    """Parse every path element of an SVG document into one normalized glyph."""
    raw: list[np.ndarray] = []
    for d in svg_path_data(svg_text):
        raw.extend(_parse_subpaths(d))
    paths = tuple(
        BezierPath(_normalize_points(p, canvas), path_index=i)
        for i, p in enumerate(raw)
    )
    return GlyphVector(paths, codepoint=codepoint, font_id=font_id)


def load_glyph_file(svg_path: Path | str) -> GlyphVector:
    """Load one glyph from an SVG file plus its JSON sidecar.

    The sidecar `<stem>.json` must carry {codepoint, font_id, bbox}; the
    bbox is the normalization canvas. The result is normalized and
    canonicalized.
    """
    svg_path = Path(svg_path)
    meta = json.loads(svg_path.with_suffix(".json").read_text())
    glyph = parse_svg_document(
        svg_path.read_text(),
        canvas=tuple(meta["bbox"]),
        codepoint=meta["codepoint"],
        font_id=meta["font_id"],
    )
    return canonicalize(glyph)


def write_glyph_file(glyph: GlyphVector, svg_path: Path | str, bbox: Bbox = UNIT_BBOX) -> None:
    """Write the SVG document plus the JSON sidecar next to it."""
    svg_path = Path(svg_path)
    svg_path.write_text(glyph_to_svg(glyph))
    meta = {"codepoint": glyph.codepoint, "font_id": glyph.font_id, "bbox": list(bbox)}
    svg_path.with_suffix(".json").write_text(json.dumps(meta) + "\n")
