import math

import pytest
import torch

from roadworld.config import ModelConfig, tiny_config
from roadworld.diffusion.encoders import (
    FrameCodec,
    PositionTokenizer,
    SpatialEncoder,
    StyleEmbedding,
    fourier_embed,
)


class TestFourierEmbed:
    def test_zero_box_gives_zero_sin_one_cos(self):
        out = fourier_embed(torch.zeros(16))
        assert out.shape == (256,)
        per_band = out.reshape(8, 2, 16)
        assert torch.all(per_band[:, 0] == 0.0)   # sin rows
        assert torch.all(per_band[:, 1] == 1.0)   # cos rows

    def test_output_length_is_256(self):
        out = fourier_embed(torch.rand(5, 16))
        assert out.shape == (5, 256)

    def test_matches_per_band_scalar_oracle(self):
        x = torch.zeros(16, dtype=torch.float64)
        x[0] = 0.5
        out = fourier_embed(x).reshape(8, 2, 16)
        for k in range(8):
            ang = (2**k) * math.pi * 0.5
            assert out[k, 0, 0].item() == pytest.approx(math.sin(ang), abs=1e-9)
            assert out[k, 1, 0].item() == pytest.approx(math.cos(ang), abs=1e-9)
        # first four bands of the first coordinate: (1,0), (0,-1), (0,1), (0,1)
        first = [(round(out[k, 0, 0].item(), 5), round(out[k, 1, 0].item(), 5)) for k in range(4)]
        assert first == [(1.0, 0.0), (0.0, -1.0), (0.0, 1.0), (0.0, 1.0)]

    def test_rejects_wrong_width(self):
        with pytest.raises(ValueError):
            fourier_embed(torch.zeros(15))


class TestPositionTokenizer:
    def test_token_count_is_slot_count(self):
        cfg = ModelConfig()
        tok = PositionTokenizer(cfg)
        boxes = torch.zeros(2, cfg.n_boxes, 16)
        cats = torch.zeros(2, cfg.n_boxes, dtype=torch.long)
        out = tok(boxes, cats)
        assert out.shape == (2, cfg.n_boxes, cfg.pos_token_dim)

    def test_paper_scale_mlp_ladder_widths(self):
        cfg = ModelConfig(pos_hidden_dim=512, pos_token_dim=768)
        tok = PositionTokenizer(cfg)
        assert tok.mlp[0].out_features == 512
        assert tok.mlp[2].out_features == 768
        assert tok.mlp[0].in_features == 256 + cfg.cat_embed_dim

    def test_different_categories_give_different_tokens(self):
        torch.manual_seed(0)
        cfg = ModelConfig()
        tok = PositionTokenizer(cfg)
        box = torch.rand(1, 1, 16)
        a = tok(box, torch.tensor([[1]]))
        b = tok(box, torch.tensor([[2]]))
        assert (a - b).norm() > 0

    def test_unknown_category_raises(self):
        cfg = tiny_config()
        tok = PositionTokenizer(cfg)
        with pytest.raises(ValueError):
            tok(torch.zeros(1, 2, 16), torch.tensor([[0, cfg.n_categories]]))

    def test_padding_slots_share_one_token(self):
        torch.manual_seed(1)
        tok = PositionTokenizer(ModelConfig())
        boxes = torch.zeros(1, 4, 16)
        cats = torch.zeros(1, 4, dtype=torch.long)
        out = tok(boxes, cats)
        assert torch.equal(out[0, 0], out[0, 1])
        assert torch.equal(out[0, 0], out[0, 3])


class TestSpatialEncoder:
    def test_desk_scale_output_alignment(self):
        cfg = ModelConfig()
        enc = SpatialEncoder(cfg)
        outs = enc(torch.rand(2, 3, 64, 128))
        assert [o.shape for o in outs] == [
            torch.Size([2, 4, 16, 32]),
            torch.Size([2, 4, 8, 16]),
            torch.Size([2, 8, 4, 8]),
        ]

    def test_paper_scale_ladder_strides(self):
        # H/4, H/16, H/64 with channels 4, 4, 8
        cfg = ModelConfig(
            frame_width=448, frame_height=256,
            enc_strides=(4, 4, 4), enc_channels=(4, 4, 8),
            unet_channels=(32, 64, 128),
        )
        outs = SpatialEncoder(cfg)(torch.rand(1, 3, 256, 448))
        assert [tuple(o.shape[1:]) for o in outs] == [
            (4, 64, 112), (4, 16, 28), (8, 4, 7),
        ]

    def test_all_zero_inputs_share_bias_response(self):
        torch.manual_seed(0)
        enc = SpatialEncoder(ModelConfig())
        a = enc(torch.zeros(1, 3, 64, 128))
        b = enc(torch.zeros(1, 3, 64, 128))
        for x, y in zip(a, b):
            assert torch.equal(x, y)

    def test_rejects_wrong_shape(self):
        enc = SpatialEncoder(ModelConfig())
        with pytest.raises(ValueError):
            enc(torch.rand(1, 3, 32, 32))


class TestStyleAndCodec:
    def test_style_token_shape(self):
        cfg = ModelConfig()
        emb = StyleEmbedding(cfg)
        out = emb(torch.tensor([0, 2]), torch.tensor([1, 0]))
        assert out.shape == (2, 2, cfg.style_dim)

    def test_codec_round_trip_shape_and_range(self):
        cfg = ModelConfig()
        codec = FrameCodec(cfg)
        frames = torch.rand(3, 3, 64, 128)
        z = codec.encode(frames)
        assert z.shape == (3, 3, 16, 32)
        assert z.min() >= -1.0 and z.max() <= 1.0
        rec = codec.decode(z)
        assert rec.shape == frames.shape

    def test_codec_encode_is_average_pooling(self):
        cfg = ModelConfig()
        codec = FrameCodec(cfg)
        frames = torch.full((1, 3, 64, 128), 0.25)
        assert torch.allclose(codec.encode(frames), torch.full((1, 3, 16, 32), -0.5))
