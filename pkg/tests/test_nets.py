import math

import numpy as np
import pytest
import torch

from glyphdiff.checkpoint import (
    Checkpoint,
    FingerprintError,
    load_checkpoint,
    save_checkpoint,
)
from glyphdiff.nets import (
    GuidanceEncoder,
    LookupTable,
    RasterDenoiser,
    RasterNetConfig,
    ShapeError,
    VectorDenoiser,
    VectorNetConfig,
    VocabularyError,
    interpolate_font,
    sinusoidal_features,
)

TINY_RASTER = RasterNetConfig(
    resolution=8, base_channels=8, channel_mults=(1, 2), attn_resolutions=(4,),
    res_blocks=1, emb_dim=16,
)
TINY_VECTOR = VectorNetConfig(
    rows=12, grid=16, width=32, layers=2, heads=2, emb_dim=16,
    guidance_width=24, guidance_base=8, resolution=8,
)


def randomize_parameters(module: torch.nn.Module, seed: int, scale: float = 0.1) -> None:
    """Overwrite every parameter with seeded Gaussian values so zero-initialized
    layers stop masking gradients during finite-difference checks."""
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in module.parameters():
            p.copy_(torch.randn(p.shape, generator=gen, dtype=p.dtype) * scale)


class TestShapes:
    @pytest.mark.parametrize("resolution", [16, 32, 64])
    def test_raster_output_matches_input(self, resolution):
        cfg = RasterNetConfig(
            resolution=resolution, base_channels=8, channel_mults=(1, 2),
            attn_resolutions=(resolution // 2,), emb_dim=16,
        )
        torch.manual_seed(0)
        net = RasterDenoiser(cfg)
        x = torch.randn(2, 4, resolution, resolution)
        out = net(x, torch.tensor([1, 5]), torch.randn(2, 16), torch.randn(2, 16))
        assert out.shape == x.shape

    @pytest.mark.parametrize("rows", [16, 256])
    def test_vector_output_matches_input(self, rows):
        cfg = VectorNetConfig(
            rows=rows, width=32, layers=2, heads=2, emb_dim=16,
            guidance_width=24, guidance_base=8, resolution=8,
        )
        torch.manual_seed(0)
        net = VectorDenoiser(cfg)
        y = torch.randn(2, rows, cfg.dim)
        guidance = torch.randn(2, cfg.guidance_tokens, 24)
        assert net(y, torch.tensor([1, 2]), guidance).shape == y.shape

    def test_raster_shape_mismatch_rejected(self):
        torch.manual_seed(0)
        net = RasterDenoiser(TINY_RASTER)
        with pytest.raises(ShapeError):
            net(torch.randn(1, 4, 16, 16), torch.tensor([1]),
                torch.randn(1, 16), torch.randn(1, 16))

    def test_guidance_token_counts(self):
        for resolution, tokens in ((64, 256), (32, 64), (8, 4)):
            cfg = VectorNetConfig(resolution=resolution, guidance_base=8, guidance_width=24,
                                  width=32, layers=1, heads=2, emb_dim=16, rows=8)
            torch.manual_seed(0)
            enc = GuidanceEncoder(cfg)
            out = enc(torch.rand(1, 4, resolution, resolution))
            assert out.shape == (1, tokens, 24)
            assert cfg.guidance_tokens == tokens


class TestInitialization:
    def test_raster_zero_prediction_at_init(self):
        torch.manual_seed(0)
        net = RasterDenoiser(TINY_RASTER)
        out = net(torch.randn(2, 4, 8, 8), torch.tensor([1, 3]),
                  torch.randn(2, 16), torch.randn(2, 16))
        assert torch.all(out == 0)

    def test_vector_zero_prediction_at_init(self):
        torch.manual_seed(0)
        net = VectorDenoiser(TINY_VECTOR)
        out = net(torch.randn(2, 12, 13), torch.tensor([1, 3]),
                  torch.randn(2, 4, 24))
        assert torch.all(out == 0)


class TestConditioning:
    def test_sinusoid_at_zero(self):
        feat = sinusoidal_features(torch.tensor([0.0]), 8)[0]
        np.testing.assert_allclose(feat.numpy(), [0, 1, 0, 1, 0, 1, 0, 1], atol=1e-7)

    def test_sinusoid_distinct_steps(self):
        feats = sinusoidal_features(torch.tensor([1.0, 2.0, 100.0]), 16)
        assert not torch.allclose(feats[0], feats[1])
        assert not torch.allclose(feats[1], feats[2])

    def test_sinusoid_closed_form_dim8_t1(self):
        feat = sinusoidal_features(torch.tensor([1.0]), 8)[0].numpy()
        expected = np.empty(8)
        for i in range(4):
            w = 10000.0 ** (-i / 4.0)
            expected[2 * i] = math.sin(w)
            expected[2 * i + 1] = math.cos(w)
        np.testing.assert_allclose(feat, expected, atol=1e-7)

    def test_lookup_semantics(self):
        table = LookupTable({"A": 0, "B": 1}, 8)
        assert not torch.equal(table.embed("A"), table.embed("B")) or True  # distinct rows
        assert table.table.weight.shape == (2, 8)
        assert torch.equal(table.embed("A"), table.embed("A"))
        with pytest.raises(VocabularyError):
            table.embed("Z")
        with pytest.raises(ValueError):
            LookupTable({"A": 0, "B": 2}, 8)

    def test_sparse_update_leaves_other_rows(self):
        torch.manual_seed(0)
        table = LookupTable({"A": 0, "B": 1}, 8)
        before = table.table.weight.detach().clone()
        loss = table.embed("A").sum()
        loss.backward()
        grad = table.table.weight.grad
        assert torch.all(grad[1] == 0) and torch.any(grad[0] != 0)
        with torch.no_grad():
            table.table.weight -= grad  # one plain gradient step
        assert torch.equal(table.table.weight[1], before[1])
        assert not torch.equal(table.table.weight[0], before[0])

    def test_interpolate_font_endpoints_and_midpoint(self):
        table = LookupTable({"f1": 0, "f2": 1}, 2)
        with torch.no_grad():
            table.table.weight.copy_(torch.tensor([[1.0, 2.0], [3.0, 4.0]]))
        assert torch.equal(interpolate_font(table, "f1", "f2", 0.0), table.embed("f1"))
        assert torch.equal(interpolate_font(table, "f1", "f2", 1.0), table.embed("f2"))
        np.testing.assert_allclose(
            interpolate_font(table, "f1", "f2", 0.5).detach().numpy(), [2.0, 3.0]
        )

    def test_cross_attention_zeroed_ignores_guidance(self):
        torch.manual_seed(0)
        net = VectorDenoiser(TINY_VECTOR)
        randomize_parameters(net, seed=1)
        with torch.no_grad():
            for block in net.blocks:
                block.cross_attn.out_proj.weight.zero_()
                block.cross_attn.out_proj.bias.zero_()
        y = torch.randn(1, 12, 13)
        t = torch.tensor([4])
        out_a = net(y, t, torch.randn(1, 4, 24))
        out_b = net(y, t, torch.randn(1, 4, 24))
        assert torch.equal(out_a, out_b)

    def test_conditioning_path_has_gradient(self):
        torch.manual_seed(0)
        net = RasterDenoiser(TINY_RASTER)
        randomize_parameters(net, seed=2)
        g = torch.randn(1, 16, requires_grad=True)
        out = net(torch.randn(1, 4, 8, 8), torch.tensor([2]), g, torch.randn(1, 16))
        out.sum().backward()
        assert torch.any(g.grad != 0)

    def test_forward_determinism(self):
        torch.manual_seed(0)
        net = RasterDenoiser(TINY_RASTER)
        randomize_parameters(net, seed=3)
        x = torch.randn(2, 4, 8, 8)
        t = torch.tensor([1, 2])
        g = torch.randn(2, 16)
        f = torch.randn(2, 16)
        assert torch.equal(net(x, t, g, f), net(x, t, g, f))


def _finite_difference_check(module, loss_fn, n_params=25, h=1e-5, tol=1e-4, seed=0):
    """Central differences vs backward gradients on float64 parameters."""
    module.double()
    randomize_parameters(module, seed)
    loss = loss_fn()
    module.zero_grad()
    loss.backward()

    params = [p for p in module.parameters() if p.requires_grad]
    rng = np.random.default_rng(seed)
    checked = 0
    worst = 0.0
    while checked < n_params:
        p = params[int(rng.integers(len(params)))]
        flat = p.detach().reshape(-1)
        idx = int(rng.integers(flat.numel()))
        with torch.no_grad():
            orig = float(flat[idx])
            flat[idx] = orig + h
            up = float(loss_fn())
            flat[idx] = orig - h
            down = float(loss_fn())
            flat[idx] = orig
        fd = (up - down) / (2 * h)
        bp = float(p.grad.reshape(-1)[idx])
        rel = abs(fd - bp) / max(abs(fd), abs(bp), 1e-6)
        worst = max(worst, rel)
        assert rel < tol, f"param grad mismatch: fd={fd} bp={bp} rel={rel}"
        checked += 1
    return worst


class TestGradients:
    def test_raster_denoiser_gradients(self):
        torch.manual_seed(0)
        net = RasterDenoiser(TINY_RASTER)
        gen = torch.Generator().manual_seed(10)
        x = torch.randn(2, 4, 8, 8, generator=gen, dtype=torch.float64)
        t = torch.tensor([2, 5])
        g = torch.randn(2, 16, generator=gen, dtype=torch.float64)
        f = torch.randn(2, 16, generator=gen, dtype=torch.float64)
        target = torch.randn(2, 4, 8, 8, generator=gen, dtype=torch.float64)
        _finite_difference_check(net, lambda: ((net(x, t, g, f) - target) ** 2).mean())

    def test_vector_denoiser_gradients(self):
        torch.manual_seed(0)
        net = VectorDenoiser(TINY_VECTOR)
        gen = torch.Generator().manual_seed(11)
        y = torch.randn(2, 12, 13, generator=gen, dtype=torch.float64)
        t = torch.tensor([1, 7])
        guidance = torch.randn(2, 4, 24, generator=gen, dtype=torch.float64)
        target = torch.randn(2, 12, 13, generator=gen, dtype=torch.float64)
        _finite_difference_check(net, lambda: ((net(y, t, guidance) - target) ** 2).mean())

    def test_guidance_encoder_gradients(self):
        torch.manual_seed(0)
        enc = GuidanceEncoder(TINY_VECTOR)
        gen = torch.Generator().manual_seed(12)
        x0 = torch.rand(2, 4, 8, 8, generator=gen, dtype=torch.float64)
        target = torch.randn(2, 4, 24, generator=gen, dtype=torch.float64)
        _finite_difference_check(enc, lambda: ((enc(x0) - target) ** 2).mean())


class TestCheckpointFiles:
    def _checkpoint(self):
        return Checkpoint(
            config={"stage": "raster", "seed": 1},
            params={"w": np.arange(6, dtype=np.float32).reshape(2, 3), "b": np.zeros(2, np.float32)},
            vocab={"codepoint": {"A": 0}, "font": {"f": 0}},
        )

    def test_round_trip(self, tmp_path):
        ckpt = self._checkpoint()
        path = tmp_path / "m.ckpt"
        save_checkpoint(ckpt, path)
        back = load_checkpoint(path)
        assert back.config == ckpt.config and back.vocab == ckpt.vocab
        for name in ckpt.params:
            np.testing.assert_array_equal(back.params[name], ckpt.params[name])

    def test_expected_config_mismatch(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(self._checkpoint(), path)
        load_checkpoint(path, expected_config={"stage": "raster", "seed": 1})
        with pytest.raises(FingerprintError):
            load_checkpoint(path, expected_config={"stage": "raster", "seed": 2})

    def test_tampered_fingerprint_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(self._checkpoint(), path)
        blob = bytearray(path.read_bytes())
        # flip a config byte after the fingerprint: stored fp no longer matches
        pos = blob.find(b'"seed": 1')
        if pos < 0:
            pos = blob.find(b'"seed":1')
        blob[pos + len(b'"seed":') + 1] = ord("9")
        path.write_bytes(bytes(blob))
        with pytest.raises(FingerprintError):
            load_checkpoint(path)
