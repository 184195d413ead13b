import csv

import numpy as np
import pytest

from glyphdiff.glyphs import BezierPath, GlyphVector, parse_svg_path, UNIT_BBOX
from glyphdiff.metrics import (
    EvalReport,
    chamfer,
    cp_diff,
    glyph_metrics,
    l1_metric,
    vp_diff,
    write_reports,
)
from conftest import chamfer_brute, random_glyph

EMPTY = GlyphVector(())


def _glyph_with_counts(*counts):
    paths = []
    rng = np.random.default_rng(sum(counts))
    for i, n in enumerate(counts):
        base = np.array([0.1 + 0.2 * i, 0.1 + 0.1 * i])
        pts = np.clip(base + rng.random((n, 2)) * 0.15, 0, 1)
        paths.append(BezierPath(pts, path_index=i))
    return GlyphVector(tuple(paths))


class TestL1:
    def test_identical_zero(self, corpus_glyphs):
        g = corpus_glyphs[0]
        assert l1_metric(g, g, 32) == 0.0

    def test_empty_vs_full_square_analytic(self):
        square = parse_svg_path("M0,0 L1,0 L1,1 L0,1 Z", UNIT_BBOX)
        assert l1_metric(EMPTY, square, 32) == 1.0  # full coverage everywhere

    def test_symmetry(self, corpus_glyphs):
        a, b = corpus_glyphs[0], corpus_glyphs[1]
        assert l1_metric(a, b, 32) == l1_metric(b, a, 32)

    def test_bounded(self, corpus_glyphs):
        a, b = corpus_glyphs[2], corpus_glyphs[3]
        assert 0.0 <= l1_metric(a, b, 32) <= 1.0


class TestChamfer:
    def test_identical_sets(self):
        pts = np.random.default_rng(0).random((10, 2))
        assert chamfer(pts, pts) == 0.0

    def test_singletons_hand_value(self):
        value = chamfer(np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]]))
        assert value == pytest.approx(64 * np.sqrt(2), rel=1e-12)

    def test_empty_conventions(self):
        pts = np.array([[0.5, 0.5]])
        assert chamfer(np.zeros((0, 2)), np.zeros((0, 2))) == 0.0
        assert chamfer(pts, np.zeros((0, 2))) == pytest.approx(64 * np.sqrt(2))
        assert chamfer(np.zeros((0, 2)), pts) == pytest.approx(64 * np.sqrt(2))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            a = rng.random((int(rng.integers(1, 21)), 2))
            b = rng.random((int(rng.integers(1, 21)), 2))
            assert chamfer(a, b) == pytest.approx(chamfer_brute(a, b), rel=1e-12, abs=1e-12)

    def test_bounded_by_diagonal(self):
        rng = np.random.default_rng(5)
        a, b = rng.random((8, 2)), rng.random((12, 2))
        assert chamfer(a, b) <= 64 * np.sqrt(2)


class TestCounts:
    def test_identical_zero(self, corpus_glyphs):
        g = corpus_glyphs[0]
        assert cp_diff(g, g) == 0.0
        assert vp_diff(g, g) == 0.0

    def test_single_pair(self):
        assert cp_diff(_glyph_with_counts(9), _glyph_with_counts(12)) == 3.0

    def test_unpaired_path_contributes_full_count(self):
        gt = _glyph_with_counts(12, 6)
        pred = _glyph_with_counts(12)
        # canonical pairing: one matched pair plus one unpaired 6-point path
        assert cp_diff(pred, gt) == (abs(12 - 12) + 6) / 2

    def test_empty_prediction(self):
        gt = _glyph_with_counts(12)
        assert cp_diff(EMPTY, gt) == 12.0
        assert cp_diff(EMPTY, EMPTY) == 0.0

    def test_vp_diff(self):
        assert vp_diff(_glyph_with_counts(3, 3, 3), _glyph_with_counts(3)) == 2.0
        assert vp_diff(_glyph_with_counts(3), _glyph_with_counts(3, 3, 3)) == 2.0


class TestReportAndZeroIff:
    def test_all_zero_iff_same_glyph(self):
        rng = np.random.default_rng(6)
        g = random_glyph(rng, max_paths=3, rows=48)
        report = glyph_metrics(g, g, resolution=32)
        assert (report.l1, report.cd, report.cp_diff, report.vp_diff) == (0, 0, 0, 0)
        other = random_glyph(rng, max_paths=3, rows=48)
        r2 = glyph_metrics(other, g, resolution=32)
        assert r2.cd > 0

    def test_pure_repeatable(self, corpus_glyphs):
        a, b = corpus_glyphs[0], corpus_glyphs[1]
        r1 = glyph_metrics(a, b, resolution=32)
        r2 = glyph_metrics(a, b, resolution=32)
        assert r1 == r2

    def test_csv_rows_and_aggregate(self, tmp_path):
        reports = [
            EvalReport("A", "f", 0.5, 2.0, 1.0, 0.0),
            EvalReport("B", "f", 0.1, 4.0, 3.0, 1.0),
            EvalReport("C", "f", float("nan"), float("nan"), float("nan"), float("nan"),
                       error="boom"),
        ]
        path = tmp_path / "eval.csv"
        write_reports(reports, path)
        rows = list(csv.reader(path.read_text().splitlines()))
        assert rows[0] == ["codepoint", "font_id", "l1", "cd", "cp_diff", "vp_diff", "error"]
        assert len(rows) == 5  # header + 3 glyphs + aggregate
        assert rows[3][6] == "boom"
        mean_row = rows[4]
        assert mean_row[0] == "mean"
        assert float(mean_row[2]) == pytest.approx(0.3)  # mean over clean rows only
        assert float(mean_row[3]) == pytest.approx(3.0)

    def test_csv_deterministic(self, tmp_path):
        reports = [EvalReport("A", "f", 1 / 3, 2 / 7, 0.0, 0.0)]
        write_reports(reports, tmp_path / "a.csv")
        write_reports(reports, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
