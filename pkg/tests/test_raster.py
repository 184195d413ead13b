import numpy as np
import pytest

from glyphdiff.glyphs import BezierPath, GlyphVector, parse_svg_path, UNIT_BBOX
from glyphdiff.raster import (
    RasterTarget,
    color_lookup,
    compose_target,
    export_debug_png,
    load_raster,
    point_multiplicities,
    raster_header,
    rasterize_glyph,
    render_control_point_field,
    save_raster,
)

EMPTY = GlyphVector(())


def _downsample2(img):
    n = img.shape[0] // 2
    return img.reshape(n, 2, n, 2).mean(axis=(1, 3))


class TestRasterize:
    def test_empty_glyph_all_zero(self):
        assert not rasterize_glyph(EMPTY, 32).any()

    def test_full_canvas_square(self):
        glyph = parse_svg_path("M0,0 L1,0 L1,1 L0,1 Z", UNIT_BBOX)
        img = rasterize_glyph(glyph, 32)
        assert np.all(img == 1.0)

    def test_disk_coverage_mass(self):
        # circle of radius 0.25 from 4 cubic arcs; analytic disk area oracle
        k = 0.5522847498307936
        r, c = 0.25, 0.5
        h = r * k
        d = (
            f"M{c + r},{c} C{c + r},{c + h} {c + h},{c + r} {c},{c + r} "
            f"C{c - h},{c + r} {c - r},{c + h} {c - r},{c} "
            f"C{c - r},{c - h} {c - h},{c - r} {c},{c - r} "
            f"C{c + h},{c - r} {c + r},{c - h} {c + r},{c} Z"
        )
        glyph = parse_svg_path(d, UNIT_BBOX)
        img = rasterize_glyph(glyph, 64)
        expected = np.pi * (0.25 * 64) ** 2
        assert abs(img.sum() - expected) / expected < 0.02

    def test_hole_via_opposite_winding(self, corpus_glyphs):
        ring = next(g for g in corpus_glyphs if g.codepoint == "G" and g.font_id == "alpha")
        img = rasterize_glyph(ring, 64)
        assert img[32, 32] == 0.0  # center of the ring is a hole
        assert img.max() == 1.0

    def test_invariant_under_path_permutation_and_rotation(self):
        rng = np.random.default_rng(3)
        pts_a = rng.random((12, 2))
        pts_b = rng.random((9, 2))
        g = GlyphVector((BezierPath(pts_a, 0), BezierPath(pts_b, 1)))
        base = rasterize_glyph(g, 32)
        permuted = GlyphVector((BezierPath(pts_b, 0), BezierPath(pts_a, 1)))
        np.testing.assert_array_equal(rasterize_glyph(permuted, 32), base)
        rotated = GlyphVector((BezierPath(np.roll(pts_a, 6, axis=0), 0), BezierPath(pts_b, 1)))
        np.testing.assert_allclose(rasterize_glyph(rotated, 32), base, atol=1e-12)

    def test_antialiasing_consistency_on_corpus(self, corpus_glyphs):
        # doubling N then 2x2 box filtering reproduces the N-res channel
        for g in corpus_glyphs[::5]:
            low = rasterize_glyph(g, 32)
            high = rasterize_glyph(g, 64)
            assert np.abs(_downsample2(high) - low).max() <= 0.06


class TestColorLookup:
    def test_first_point_of_twelve(self):
        np.testing.assert_allclose(color_lookup(0, 1, 12), [1 / 12, 1 / 3, 1.0])

    def test_last_point_saturates_channel_one(self):
        np.testing.assert_allclose(color_lookup(11, 1, 12), [1.0, 1 / 3, 0.5])

    def test_multiplicity_cap(self):
        assert color_lookup(3, 3, 12)[1] == 1.0
        assert color_lookup(3, 5, 12)[1] == 1.0

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            color_lookup(-1, 1, 3)
        with pytest.raises(ValueError):
            color_lookup(0, 0, 3)


class TestMultiplicities:
    def test_all_distinct(self):
        pts = np.array([[0, 0], [1, 0], [0, 1]], dtype=float)
        np.testing.assert_array_equal(point_multiplicities(pts), [1, 1, 1])

    def test_consecutive_run(self):
        pts = np.array([[0, 0], [0, 0], [1, 1]], dtype=float)
        np.testing.assert_array_equal(point_multiplicities(pts), [2, 2, 1])

    def test_cyclic_wrap_run(self):
        pts = np.array([[0, 0], [1, 1], [0.5, 0.5], [0, 0]], dtype=float)
        # last point wraps onto the first
        np.testing.assert_array_equal(point_multiplicities(pts), [2, 1, 1, 2])

    def test_all_identical(self):
        pts = np.zeros((6, 2))
        np.testing.assert_array_equal(point_multiplicities(pts), [6] * 6)


class TestControlPointField:
    def test_empty_glyph(self):
        assert not render_control_point_field(EMPTY, 32).any()

    def test_single_point_gaussian_closed_form(self):
        # first point at (0.5, 0.5); others far enough to not overlap
        pts = np.array([[0.5, 0.5], [0.05, 0.05], [0.05, 0.2]])
        g = GlyphVector((BezierPath(pts),))
        field = render_control_point_field(g, 64)
        color = color_lookup(0, 1, 3)
        for (row, col) in [(32, 32), (32, 33), (33, 32), (34, 32), (30, 30)]:
            d2 = (col - 32.0) ** 2 + (row - 32.0) ** 2
            expected = np.exp(-d2 / 8.0)
            for ch in range(3):
                assert field[ch, row, col] == pytest.approx(expected * color[ch], abs=1e-12)

    def test_truncation_beyond_three_sigma(self):
        pts = np.array([[0.5, 0.5], [0.05, 0.05], [0.05, 0.2]])
        g = GlyphVector((BezierPath(pts),))
        field = render_control_point_field(g, 64)
        assert field[0, 32, 39] == 0.0  # 7 px away from the blob center
        assert field[2, 32, 38] > 0.0   # 6 px away is still inside

    def test_multiplicity_two_max_blending(self):
        pts = np.array([[0.3, 0.3], [0.3, 0.3], [0.7, 0.4]])
        g = GlyphVector((BezierPath(pts),))
        field = render_control_point_field(g, 64)
        # peak near (19.2, 19.2): max of the two coincident blobs, not the sum
        d2 = (19 - 19.2) ** 2 + (19 - 19.2) ** 2
        peak = np.exp(-d2 / 8.0)
        colors = [color_lookup(0, 2, 3), color_lookup(1, 2, 3)]
        for ch in range(3):
            expected = peak * max(c[ch] for c in colors)
            assert field[ch, 19, 19] == pytest.approx(expected, abs=1e-12)

    def test_bounded_by_unit(self, corpus_glyphs):
        for g in corpus_glyphs[::7]:
            field = render_control_point_field(g, 32)
            assert field.min() >= 0.0 and field.max() <= 1.0

    def test_center_pixel_support(self, corpus_glyphs):
        g = corpus_glyphs[0]
        field = render_control_point_field(g, 64)
        floor = np.exp(-0.5 / 8.0)  # worst-case subpixel offset attenuation
        for path in g.paths:
            mult = point_multiplicities(path.points)
            for i, p in enumerate(path.points):
                col = int(np.clip(np.rint(p[0] * 64), 0, 63))
                row = int(np.clip(np.rint(p[1] * 64), 0, 63))
                color = color_lookup(i, int(mult[i]), len(path.points))
                for ch in range(3):
                    assert field[ch, row, col] >= color[ch] * floor - 1e-9


class TestComposeAndFiles:
    def test_empty_glyph_four_zero_channels(self):
        target = compose_target(EMPTY, 32)
        assert target.channels.shape == (4, 32, 32)
        assert not target.channels.any()

    def test_channel_wiring(self, corpus_glyphs):
        g = corpus_glyphs[0]
        target = compose_target(g, 32)
        np.testing.assert_array_equal(target.glyph_channel, rasterize_glyph(g, 32))
        np.testing.assert_array_equal(target.field_channels, render_control_point_field(g, 32))

    def test_glyph_channel_ignores_point_ordering(self, corpus_glyphs):
        g = next(g for g in corpus_glyphs if g.total_points >= 12)
        rotated_paths = tuple(
            BezierPath(np.roll(p.points, 3, axis=0), p.path_index) for p in g.paths
        )
        reordered = GlyphVector(rotated_paths, g.codepoint, g.font_id)
        a = compose_target(g, 32)
        b = compose_target(reordered, 32)
        np.testing.assert_allclose(a.glyph_channel, b.glyph_channel, atol=1e-12)
        assert not np.array_equal(a.field_channels, b.field_channels)

    def test_raster_file_round_trip(self, tmp_path, corpus_glyphs):
        target = compose_target(corpus_glyphs[3], 32)
        path = tmp_path / "t.raster.bin"
        save_raster(target, path)
        back = load_raster(path)
        assert raster_header(path) == (32, 4, 1)
        np.testing.assert_allclose(back.channels, target.channels, atol=1e-7)

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"XXXX" + b"\0" * 28)
        with pytest.raises(ValueError, match="not a raster target"):
            load_raster(path)

    def test_debug_png_export(self, tmp_path, corpus_glyphs):
        target = compose_target(corpus_glyphs[0], 32)
        glyph_png, field_png = export_debug_png(target, tmp_path / "dbg")
        assert glyph_png.exists() and field_png.exists()

    def test_raster_target_validation(self):
        with pytest.raises(ValueError):
            RasterTarget(np.zeros((3, 8, 8)))
