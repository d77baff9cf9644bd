"""Condition encoders: box position tokens, spatial rasters, style ids, frames.

All learned layers use sigmoid-linear (SiLU) activations.  The spatial
encoder is a ladder of strided convolutions producing one feature map per
UNet level; channel-concat ordering downstream is fixed as
[latent | map features | reference-image features].
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..config import ModelConfig


def fourier_embed(box16: torch.Tensor, bands: int = 8) -> torch.Tensor:
    """Sinusoidal features of the 16 box values at frequencies 2^k * pi.

    Input (..., 16) -> output (..., 16 * 2 * bands), band-major layout:
    [band 0: sin(pi x_0..15), cos(pi x_0..15), band 1: sin(2 pi x), ...].
    """
    if box16.shape[-1] != 16:
        raise ValueError("expected 16 box values")
    freqs = (2.0 ** torch.arange(bands, dtype=box16.dtype, device=box16.device)) * math.pi
    ang = freqs.reshape(-1, 1) * box16.unsqueeze(-2)          # (..., bands, 16)
    feats = torch.stack([torch.sin(ang), torch.cos(ang)], dim=-2)  # (..., bands, 2, 16)
    return feats.reshape(*box16.shape[:-1], bands * 32)


class PositionTokenizer(nn.Module):
    """Category embedding + Fourier box features -> one token per box slot.

    Padded slots (all-zero boxes, category 0) all map to the same token, so
    attention over them is permutation-invariant by construction.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.bands = cfg.fourier_bands
        self.categories = nn.Embedding(cfg.n_categories, cfg.cat_embed_dim)
        in_dim = cfg.fourier_dim() + cfg.cat_embed_dim
        self.mlp = nn.Sequential(
            nn.Linear(in_dim, cfg.pos_hidden_dim),
            nn.SiLU(),
            nn.Linear(cfg.pos_hidden_dim, cfg.pos_token_dim),
        )

    def forward(self, box16: torch.Tensor, category_ids: torch.Tensor) -> torch.Tensor:
        """(..., N_B, 16) boxes + (..., N_B) ids -> (..., N_B, token_dim)."""
        if torch.any(category_ids < 0) or torch.any(category_ids >= self.categories.num_embeddings):
            raise ValueError("unknown category id")
        cat = self.categories(category_ids)
        feats = torch.cat([cat, fourier_embed(box16, self.bands)], dim=-1)
        return self.mlp(feats)


class SpatialEncoder(nn.Module):
    """Strided-conv ladder over an HxWx3 input; one output per UNet level.

    Kernel size equals stride (patch-style downsampling), SiLU after every
    conv.  The first output is spatially aligned with the latent tensor.
    """

    def __init__(self, cfg: ModelConfig, in_channels: int = 3):
        super().__init__()
        self.cfg = cfg
        convs = []
        prev = in_channels
        for ch, stride in zip(cfg.enc_channels, cfg.enc_strides):
            # kernel == stride: 4x4/S4 at the top step, 2x2/S2 below
            convs.append(nn.Conv2d(prev, ch, kernel_size=stride, stride=stride))
            prev = ch
        self.convs = nn.ModuleList(convs)

    def forward(self, image: torch.Tensor) -> list[torch.Tensor]:
        """(N, 3, H, W) -> list of (N, C_i, h_i, w_i), one per level."""
        if image.shape[-2:] != (self.cfg.frame_height, self.cfg.frame_width):
            raise ValueError(
                f"expected {self.cfg.frame_height}x{self.cfg.frame_width} input, "
                f"got {tuple(image.shape[-2:])}"
            )
        outs = []
        x = image
        for conv in self.convs:
            x = F.silu(conv(x))
            outs.append(x)
        return outs


class StyleEmbedding(nn.Module):
    """Weather and time-of-day ids -> two style tokens per frame."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.weather = nn.Embedding(cfg.weather_count, cfg.style_dim)
        self.timeofday = nn.Embedding(cfg.timeofday_count, cfg.style_dim)

    def forward(self, weather_id: torch.Tensor, timeofday_id: torch.Tensor) -> torch.Tensor:
        """(N,) ids -> (N, 2, style_dim) tokens."""
        return torch.stack([self.weather(weather_id), self.timeofday(timeofday_id)], dim=-2)


class FrameCodec(nn.Module):
    """Fixed average-pool encode to latent space; learned 3x3 conv decode head.

    Latents are zero-centered: z = 2 * avgpool(frame) - 1, so a unit-variance
    noise target gives the zero-predictor a loss of ~1.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        if cfg.latent_channels != 3:
            raise ValueError("frame codec requires 3 latent channels")
        self.down = cfg.latent_downsample
        self.decode_conv = nn.Conv2d(3, 3, kernel_size=3, padding=1)

    def encode(self, frames: torch.Tensor) -> torch.Tensor:
        """(N, 3, H, W) pixels in [0, 1] -> (N, 3, h, w) latents in [-1, 1]."""
        return 2.0 * F.avg_pool2d(frames, self.down) - 1.0

    def decode(self, latents: torch.Tensor) -> torch.Tensor:
        """(N, 3, h, w) -> (N, 3, H, W); unclamped (clamp at export time)."""
        up = F.interpolate(latents, scale_factor=self.down, mode="nearest")
        return self.decode_conv((up + 1.0) / 2.0)
