"""Dataset construction: scan glyph files into a split manifest with stable
vocabularies, and precompute the raster/tensor training targets."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codec import MAX_PATHS, encode_glyph, save_tensor, tensor_header
from .config import TrainConfig
from .glyphs import GlyphVector, load_glyph_file
from .checkpoint import FingerprintError
from .raster import compose_target, raster_header, save_raster

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    codepoint: str
    font_id: str
    split: str

    @property
    def stem(self) -> str:
        return Path(self.path).stem


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    codepoint_vocab: dict[str, int]
    font_vocab: dict[str, int]
    capacity_rows: int          # M used for the capacity filter
    seed: int
    fractions: tuple[float, float, float]
    excluded: int = 0

    def split(self, name: str) -> list[ManifestEntry]:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return [e for e in self.entries if e.split == name]


def build_dataset(
    glyph_dir: Path | str,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
    capacity_rows: int = 256,
) -> DatasetManifest:
    """Scan a directory of SVG+sidecar glyph files into a split manifest.

    Files parse, normalize, and canonicalize; glyphs beyond codec capacity
    are excluded with a logged count; unparsable files are logged and
    skipped. The split assignment is a seeded permutation, so the same
    seed always reproduces it.
    """
    glyph_dir = Path(glyph_dir)
    svg_files = sorted(glyph_dir.glob("*.svg"))
    if not svg_files:
        raise FileNotFoundError(f"no glyph files in {glyph_dir}")
    if abs(sum(fractions) - 1.0) > 1e-9 or len(fractions) != 3:
        raise ValueError(f"split fractions must be three values summing to 1, got {fractions}")

    kept: list[tuple[Path, GlyphVector]] = []
    excluded = 0
    for path in svg_files:
        try:
            glyph = load_glyph_file(path)
        except Exception as exc:
            log.warning("skipping unparsable glyph file %s: %s", path.name, exc)
            continue
        if len(glyph.paths) > MAX_PATHS or glyph.total_points > capacity_rows:
            log.info(
                "excluding %s: %d paths / %d points exceeds capacity (%d paths, %d points)",
                path.name, len(glyph.paths), glyph.total_points, MAX_PATHS, capacity_rows,
            )
            excluded += 1
            continue
        kept.append((path, glyph))
    if excluded:
        log.info("excluded %d glyphs beyond codec capacity", excluded)
    if not kept:
        raise FileNotFoundError(f"no usable glyph files in {glyph_dir}")

    n = len(kept)
    n_train = int(fractions[0] * n)
    n_val = int(fractions[1] * n)
    n_train += n - n_train - n_val - int(fractions[2] * n)  # remainder goes to train
    order = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed))).permutation(n)
    split_of = {}
    for rank, idx in enumerate(order):
        split_of[int(idx)] = "train" if rank < n_train else ("val" if rank < n_train + n_val else "test")

    entries = tuple(
        ManifestEntry(
            path=str(path), codepoint=glyph.codepoint, font_id=glyph.font_id,
            split=split_of[i],
        )
        for i, (path, glyph) in enumerate(kept)
    )
    codepoints = sorted({e.codepoint for e in entries})
    fonts = sorted({e.font_id for e in entries})
    return DatasetManifest(
        entries=entries,
        codepoint_vocab={c: i for i, c in enumerate(codepoints)},
        font_vocab={f: i for i, f in enumerate(fonts)},
        capacity_rows=capacity_rows,
        seed=seed,
        fractions=tuple(fractions),
        excluded=excluded,
    )


def save_manifest(manifest: DatasetManifest, path: Path | str) -> None:
    doc = {
        "entries": [
            {"path": e.path, "codepoint": e.codepoint, "font_id": e.font_id, "split": e.split}
            for e in manifest.entries
        ],
        "codepoint_vocab": manifest.codepoint_vocab,
        "font_vocab": manifest.font_vocab,
        "capacity_rows": manifest.capacity_rows,
        "seed": manifest.seed,
        "fractions": list(manifest.fractions),
        "excluded": manifest.excluded,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_manifest(path: Path | str) -> DatasetManifest:
    doc = json.loads(Path(path).read_text())
    return DatasetManifest(
        entries=tuple(ManifestEntry(**e) for e in doc["entries"]),
        codepoint_vocab=doc["codepoint_vocab"],
        font_vocab=doc["font_vocab"],
        capacity_rows=doc["capacity_rows"],
        seed=doc["seed"],
        fractions=tuple(doc["fractions"]),
        excluded=doc["excluded"],
    )


# --- target precompute -------------------------------------------------------


def _source_hash(entry: ManifestEntry) -> str:
    svg = Path(entry.path)
    digest = hashlib.sha256()
    digest.update(svg.read_bytes())
    digest.update(svg.with_suffix(".json").read_bytes())
    return digest.hexdigest()


def precompute_targets(
    manifest: DatasetManifest, config: TrainConfig, out_dir: Path | str
) -> int:
    """Persist (RasterTarget, VectorTensor) pairs for every manifest entry.

    Idempotent: entries whose source hash and codec constants already match
    the stored meta file are skipped. Returns the number of entries
    (re)written.
    """
    if config.rows != manifest.capacity_rows:
        raise FingerprintError(
            f"config rows M={config.rows} != manifest capacity {manifest.capacity_rows}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    codec_meta = {"N": config.resolution, "M": config.rows, "P": config.grid}
    written = 0
    for entry in manifest.entries:
        meta_path = out_dir / f"{entry.stem}.meta.json"
        raster_path = out_dir / f"{entry.stem}.raster.bin"
        tensor_path = out_dir / f"{entry.stem}.tensor.bin"
        meta = {"source_sha256": _source_hash(entry), "codec": codec_meta}
        if meta_path.exists() and raster_path.exists() and tensor_path.exists():
            if json.loads(meta_path.read_text()) == meta:
                continue
        glyph = load_glyph_file(entry.path)
        save_raster(compose_target(glyph, config.resolution), raster_path)
        save_tensor(encode_glyph(glyph, rows=config.rows, grid=config.grid), tensor_path)
        meta_path.write_text(json.dumps(meta, sort_keys=True) + "\n")
        written += 1
    return written


def check_target_headers(
    manifest: DatasetManifest, config: TrainConfig, targets_dir: Path | str
) -> None:
    """Refuse to mix artifacts produced under different codec constants."""
    targets_dir = Path(targets_dir)
    for entry in manifest.entries:
        n, channels, _ = raster_header(targets_dir / f"{entry.stem}.raster.bin")
        if n != config.resolution or channels != 4:
            raise FingerprintError(
                f"{entry.stem}: raster target is {channels}x{n}x{n}, "
                f"config wants 4x{config.resolution}x{config.resolution}"
            )
        rows, dim, grid, _ = tensor_header(targets_dir / f"{entry.stem}.tensor.bin")
        if rows != config.rows or grid != config.grid or dim != config.dim:
            raise FingerprintError(
                f"{entry.stem}: tensor target is M={rows} D={dim} P={grid}, "
                f"config wants M={config.rows} D={config.dim} P={config.grid}"
            )
