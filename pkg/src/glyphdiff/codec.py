"""Bidirectional codec between glyphs and the M x D real tensor consumed by
the vector denoiser: path-membership bits, grid-cell bits, and residual
displacements, with threshold-based decoding that is total over arbitrary
real input."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .glyphs import BezierPath, GlyphVector

TENSOR_MAGIC = b"GDVT"
# v1: big-endian bits as {-1,+1} reals thresholded at 0, row-major cells,
# residuals scaled by 2P, null rows all-one membership bits
TENSOR_FORMAT_VERSION = 1

PATH_BITS = 3
MAX_PATHS = (1 << PATH_BITS) - 1  # the all-ones code marks a null row
NULL_CODE = MAX_PATHS
DEFAULT_ROWS = 256
DEFAULT_GRID = 16


class CapacityError(ValueError):
    """Glyph exceeds codec capacity (too many paths or control points)."""


def grid_bits(grid: int) -> int:
    """Bits needed for a grid x grid cell index."""
    return max(1, int(grid * grid - 1).bit_length())


def tensor_dim(grid: int = DEFAULT_GRID) -> int:
    """Row width: membership bits + cell bits + (dx, dy)."""
    return PATH_BITS + grid_bits(grid) + 2


@dataclass(frozen=True)
class VectorTensor:
    """M x D real tensor; clean encodings keep bit slots exactly in {-1,+1}."""

    data: np.ndarray
    grid: int = DEFAULT_GRID

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != tensor_dim(self.grid):
            raise ValueError(
                f"expected (M, {tensor_dim(self.grid)}) for grid={self.grid}, got {arr.shape}"
            )
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class GridAssignment:
    cell_index: int
    dx: float
    dy: float


# --- bits ------------------------------------------------------------------


def int_to_bitreals(value: int, width: int) -> np.ndarray:
    """Big-endian binary of `value` with bit b mapped to 2b - 1."""
    if not 0 <= value < (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    bits = (value >> np.arange(width - 1, -1, -1)) & 1
    return 2.0 * bits - 1.0


def bitreals_to_int(reals: np.ndarray) -> int:
    """Threshold each real at 0 (>= 0 reads as bit 1), recompose big-endian."""
    reals = np.asarray(reals)
    bits = (reals >= 0.0).astype(np.int64)
    weights = 1 << np.arange(len(bits) - 1, -1, -1)
    return int(bits @ weights)


def _ints_to_bitreals(values: np.ndarray, width: int) -> np.ndarray:
    bits = (values[:, None] >> np.arange(width - 1, -1, -1)[None, :]) & 1
    return 2.0 * bits - 1.0


def _bitreals_to_ints(mat: np.ndarray) -> np.ndarray:
    bits = (mat >= 0.0).astype(np.int64)
    weights = 1 << np.arange(mat.shape[1] - 1, -1, -1)
    return bits @ weights


# --- grid assignment -------------------------------------------------------


def _cell_of(x: np.ndarray, grid: int) -> np.ndarray:
    # floor(x * P) realizes the nearest-centroid rule; a point exactly on a
    # cell boundary lands in the higher-index cell
    return np.clip(np.floor(x * grid).astype(np.int64), 0, grid - 1)


def assign_grid_cell(point, grid: int = DEFAULT_GRID) -> GridAssignment:
    """Nearest-centroid cell (row-major index) and the exact residual from
    the cell center. Boundary ties resolve to the higher-index cell."""
    x, y = float(point[0]), float(point[1])
    col = int(_cell_of(np.asarray(x), grid))
    row = int(_cell_of(np.asarray(y), grid))
    dx = x - (col + 0.5) / grid
    dy = y - (row + 0.5) / grid
    return GridAssignment(cell_index=row * grid + col, dx=dx, dy=dy)


# --- encode / decode -------------------------------------------------------


def null_row(grid: int = DEFAULT_GRID) -> np.ndarray:
    """Membership bits all +1 (the null code); grid bits -1; residuals 0."""
    row = np.empty(tensor_dim(grid))
    row[:PATH_BITS] = 1.0
    row[PATH_BITS:-2] = -1.0
    row[-2:] = 0.0
    return row


def encode_glyph(
    glyph: GlyphVector, rows: int = DEFAULT_ROWS, grid: int = DEFAULT_GRID
) -> VectorTensor:
    """Encode a canonicalized glyph into the M x D tensor.

    Rows fill path by path in canonical order, points in sequence order
    (repeated points occupy consecutive rows); residuals are scaled by 2P
    so clean values lie in [-1, 1]; remaining rows are null.
    """
    if len(glyph.paths) > MAX_PATHS:
        raise CapacityError(
            f"glyph has {len(glyph.paths)} paths; codec supports at most {MAX_PATHS}"
        )
    total = glyph.total_points
    if total > rows:
        raise CapacityError(f"glyph has {total} control points; capacity is {rows}")

    gb = grid_bits(grid)
    data = np.tile(null_row(grid), (rows, 1))
    if total:
        pts = glyph.all_points()
        owners = np.concatenate(
            [np.full(len(p.points), i, dtype=np.int64) for i, p in enumerate(glyph.paths)]
        )
        col = _cell_of(pts[:, 0], grid)
        row = _cell_of(pts[:, 1], grid)
        cell = row * grid + col
        data[:total, :PATH_BITS] = _ints_to_bitreals(owners, PATH_BITS)
        data[:total, PATH_BITS : PATH_BITS + gb] = _ints_to_bitreals(cell, gb)
        data[:total, -2] = (pts[:, 0] - (col + 0.5) / grid) * (2 * grid)
        data[:total, -1] = (pts[:, 1] - (row + 0.5) / grid) * (2 * grid)
    return VectorTensor(data, grid=grid)


def decode_tensor(
    tensor: VectorTensor, codepoint: str = "", font_id: str = ""
) -> GlyphVector:
    """Decode arbitrary real-valued tensor rows into a glyph; total.

    Membership bits threshold per row; null rows drop; surviving rows group
    by membership index in row order. Paths whose point count is not a
    multiple of 3 lose trailing points; empty paths drop. Coordinates are
    cell centroid + residual / 2P, clamped to [0, 1].
    """
    grid = tensor.grid
    gb = grid_bits(grid)
    data = tensor.data
    membership = _bitreals_to_ints(data[:, :PATH_BITS])
    paths: list[BezierPath] = []
    for index in range(MAX_PATHS):
        sel = np.nonzero(membership == index)[0]
        keep = len(sel) - len(sel) % 3
        if keep == 0:
            continue
        sel = sel[:keep]
        cell = np.minimum(_bitreals_to_ints(data[sel, PATH_BITS : PATH_BITS + gb]),
                          grid * grid - 1)
        col = cell % grid
        row = cell // grid
        x = (col + 0.5) / grid + data[sel, -2] / (2 * grid)
        y = (row + 0.5) / grid + data[sel, -1] / (2 * grid)
        pts = np.clip(np.stack([x, y], axis=1), 0.0, 1.0)
        paths.append(BezierPath(pts, path_index=len(paths)))
    return GlyphVector(tuple(paths), codepoint=codepoint, font_id=font_id)


# --- persistence -----------------------------------------------------------

_HEADER = struct.Struct("<4sIIHH")  # magic, M, D, P, version


def save_tensor(tensor: VectorTensor, path: Path | str) -> None:
    """16-byte header {magic, M, D, P, bit-convention version} + float32 rows."""
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(TENSOR_MAGIC, tensor.rows, tensor.dim, tensor.grid,
                         TENSOR_FORMAT_VERSION)
        )
        fh.write(tensor.data.astype(np.float32).tobytes(order="C"))


def load_tensor(path: Path | str) -> VectorTensor:
    blob = Path(path).read_bytes()
    magic, rows, dim, grid, version = _HEADER.unpack_from(blob, 0)
    if magic != TENSOR_MAGIC:
        raise ValueError(f"{path}: not a vector tensor file")
    if version != TENSOR_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported tensor format version {version}")
    data = np.frombuffer(blob, dtype=np.float32, offset=_HEADER.size)
    return VectorTensor(data.reshape(rows, dim).astype(np.float64), grid=grid)


def tensor_header(path: Path | str) -> tuple[int, int, int, int]:
    """(M, D, P, version) without loading the rows."""
    with open(path, "rb") as fh:
        magic, rows, dim, grid, version = _HEADER.unpack(fh.read(_HEADER.size))
    if magic != TENSOR_MAGIC:
        raise ValueError(f"{path}: not a vector tensor file")
    return rows, dim, grid, version
