"""Command-line interface.

Subcommands: dataset build, targets precompute, train raster|vector,
sample, evaluate, schedule dump, corpus make. The data root defaults to
$GLYPHDIFF_DATA_ROOT (or ./data)."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .config import load_config
from .dataset import build_dataset, load_manifest, precompute_targets, save_manifest
from .diffusion import cosine_schedule, save_schedule
from .sampling import (
    GenRequest,
    evaluate_split,
    generate,
    load_raster_stage,
    load_vector_stage,
)
from .training import train_raster, train_vector

log = logging.getLogger("glyphdiff")


def data_root() -> Path:
    return Path(os.environ.get("GLYPHDIFF_DATA_ROOT", "data"))


def _fractions(text: str) -> tuple[float, float, float]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated fractions")
    return tuple(parts)  # type: ignore[return-value]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glyphdiff", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="dataset construction")
    dsub = p.add_subparsers(dest="action", required=True)
    p = dsub.add_parser("build", help="scan glyph files into a split manifest")
    p.add_argument("--glyphs", required=True, type=Path, help="directory of SVG+JSON glyph files")
    p.add_argument("--out", type=Path, default=None, help="manifest path (default <root>/manifest.json)")
    p.add_argument("--fractions", type=_fractions, default=(0.8, 0.1, 0.1))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-points", type=int, default=256, help="codec row capacity M")
    p.set_defaults(func=cmd_dataset_build)

    p = sub.add_parser("targets", help="training target precompute")
    tsub = p.add_subparsers(dest="action", required=True)
    p = tsub.add_parser("precompute", help="write raster and tensor targets for a manifest")
    p.add_argument("--manifest", type=Path, default=None)
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None, help="targets dir (default <root>/targets)")
    p.set_defaults(func=cmd_targets_precompute)

    p = sub.add_parser("train", help="train one stage")
    p.add_argument("stage", choices=("raster", "vector"))
    p.add_argument("--manifest", type=Path, default=None)
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--targets", type=Path, default=None)
    p.add_argument("--out", type=Path, default=None, help="checkpoint dir (default <root>/checkpoints)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="generate one glyph end to end")
    p.add_argument("--raster-ckpt", required=True, type=Path)
    p.add_argument("--vector-ckpt", required=True, type=Path)
    p.add_argument("--codepoint", required=True, help="single character, e.g. A")
    p.add_argument("--font", required=True)
    p.add_argument("--font2", default=None, help="second font for embedding interpolation")
    p.add_argument("--alpha", type=float, default=0.0, help="interpolation weight toward --font2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path, help="output SVG path")
    p.add_argument("--png-debug", type=Path, default=None, help="prefix for raster debug PNGs")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="score generated glyphs against a split")
    p.add_argument("--manifest", type=Path, default=None)
    p.add_argument("--raster-ckpt", required=True, type=Path)
    p.add_argument("--vector-ckpt", required=True, type=Path)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path, help="output CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("schedule", help="noise schedule tools")
    ssub = p.add_subparsers(dest="action", required=True)
    p = ssub.add_parser("dump", help="write the (t, beta_t) table as text")
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_schedule_dump)

    p = sub.add_parser("corpus", help="toy corpus tools")
    csub = p.add_subparsers(dest="action", required=True)
    p = csub.add_parser("make", help="write the procedural toy corpus")
    p.add_argument("--out", type=Path, default=None, help="corpus dir (default <root>/corpus)")
    p.set_defaults(func=cmd_corpus_make)

    return parser


def cmd_dataset_build(args) -> int:
    out = args.out or data_root() / "manifest.json"
    manifest = build_dataset(args.glyphs, args.fractions, args.seed, args.max_points)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_manifest(manifest, out)
    counts = {s: len(manifest.split(s)) for s in ("train", "val", "test")}
    log.info("manifest %s: %s (excluded %d)", out, counts, manifest.excluded)
    return 0


def cmd_targets_precompute(args) -> int:
    manifest = load_manifest(args.manifest or data_root() / "manifest.json")
    config = load_config(args.config)
    out = args.out or data_root() / "targets"
    written = precompute_targets(manifest, config, out)
    log.info("targets in %s: %d written, %d up to date",
             out, written, len(manifest.entries) - written)
    return 0


def cmd_train(args) -> int:
    manifest = load_manifest(args.manifest or data_root() / "manifest.json")
    config = load_config(args.config)
    if config.stage != args.stage:
        log.error("config stage %r does not match requested %r", config.stage, args.stage)
        return 2
    targets = args.targets or data_root() / "targets"
    out = args.out or data_root() / "checkpoints"
    train = train_raster if args.stage == "raster" else train_vector
    result = train(manifest, config, targets, out)
    log.info("final checkpoint: %s", result.checkpoint_path)
    return 0


def cmd_sample(args) -> int:
    raster_stage = load_raster_stage(args.raster_ckpt)
    vector_stage = load_vector_stage(args.vector_ckpt)
    request = GenRequest(args.codepoint, args.font, args.font2, args.alpha)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    glyph = generate(raster_stage, vector_stage, request, args.seed,
                     out_svg=args.out, debug_png_prefix=args.png_debug)
    log.info("wrote %s (%d paths, %d points)", args.out, len(glyph.paths), glyph.total_points)
    return 0


def cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest or data_root() / "manifest.json")
    raster_stage = load_raster_stage(args.raster_ckpt)
    vector_stage = load_vector_stage(args.vector_ckpt)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    reports = evaluate_split(manifest, raster_stage, vector_stage, args.split,
                             args.seed, out_csv=args.out)
    clean = [r for r in reports if not r.error]
    if clean:
        log.info(
            "%d glyphs: mean l1 %.4f cd %.3f cp_diff %.3f vp_diff %.3f",
            len(clean),
            sum(r.l1 for r in clean) / len(clean),
            sum(r.cd for r in clean) / len(clean),
            sum(r.cp_diff for r in clean) / len(clean),
            sum(r.vp_diff for r in clean) / len(clean),
        )
    return 0


def cmd_schedule_dump(args) -> int:
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_schedule(cosine_schedule(args.steps), args.out)
    log.info("wrote %s", args.out)
    return 0


def cmd_corpus_make(args) -> int:
    out = args.out or data_root() / "corpus"
    files = corpus_mod.write_corpus(out)
    log.info("wrote %d glyph files to %s", len(files), out)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
