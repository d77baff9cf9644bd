"""Denoising UNet with structured-condition injection.

Channel-concat ordering at every level input is fixed:
[latent | map features | reference-image features].  Each block applies
residual conv -> gated self-attention (box tokens) -> style cross-attention
-> temporal attention (video modes) -> view attention (multiview mode).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..config import ModelConfig
from .attention import (
    CrossAttention,
    GatedSelfAttention,
    TemporalAttention,
    ViewAttention,
    sinusoidal_positions,
)

MODES = ("image", "video", "multiview")


@dataclass
class ConditionBundle:
    """Per-frame control inputs for the UNet.

    spatial/ref_image hold one feature map per UNet level; positional holds
    the box tokens; style_tokens the embedded (weather, timeofday) pair.
    """

    spatial: list[torch.Tensor]                 # [(N, C_i, h_i, w_i)]
    positional: torch.Tensor                    # (N, N_B, pos_dim)
    style_tokens: torch.Tensor                  # (N, 2, style_dim)
    ref_image: list[torch.Tensor] | None = None
    view_count: int = 1

    def frames(self) -> int:
        return self.spatial[0].shape[0]


class ResBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, t_dim: int, groups: int):
        super().__init__()
        self.norm1 = nn.GroupNorm(groups, c_in)
        self.conv1 = nn.Conv2d(c_in, c_out, 3, padding=1)
        self.t_proj = nn.Linear(t_dim, c_out)
        self.norm2 = nn.GroupNorm(groups, c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, padding=1)
        self.skip = nn.Conv2d(c_in, c_out, 1) if c_in != c_out else nn.Identity()

    def forward(self, x: torch.Tensor, t_emb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.t_proj(F.silu(t_emb))[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return h + self.skip(x)


class Block(nn.Module):
    """ResBlock followed by the conditioning attention stack."""

    def __init__(self, cfg: ModelConfig, c_in: int, c_out: int,
                 with_temporal: bool, with_view: bool):
        super().__init__()
        self.res = ResBlock(c_in, c_out, cfg.time_embed_dim, cfg.norm_groups)
        self.gated = GatedSelfAttention(c_out, cfg.pos_token_dim)
        self.cross = CrossAttention(c_out, cfg.style_dim)
        self.temporal = TemporalAttention(c_out) if with_temporal else None
        self.view = ViewAttention(c_out, cfg.view_count, cfg.view_adjacency) if with_view else None

    def forward(self, x, t_emb, cond: ConditionBundle, mode: str):
        x = self.res(x, t_emb)
        n, c, h, w = x.shape
        tokens = x.reshape(n, c, h * w).transpose(1, 2)
        tokens = self.gated(tokens, cond.positional)
        tokens = self.cross(tokens, cond.style_tokens)
        x = tokens.transpose(1, 2).reshape(n, c, h, w)
        if mode in ("video", "multiview") and self.temporal is not None:
            v = cond.view_count
            frames = n // v
            grouped = x.reshape(frames, v, c, h, w).transpose(0, 1)  # (V, T, ...)
            grouped = self._axis(self.temporal, grouped)
            x = grouped.transpose(0, 1).reshape(n, c, h, w)
        if mode == "multiview" and self.view is not None:
            v = cond.view_count
            grouped = x.reshape(n // v, v, c, h, w)                  # (T, V, ...)
            grouped = self._axis(self.view, grouped)
            x = grouped.reshape(n, c, h, w)
        return x

    @staticmethod
    def _axis(layer, grouped: torch.Tensor) -> torch.Tensor:
        # layer operates per spatial location; fold the batch dim into width
        b, n, c, h, w = grouped.shape
        folded = grouped.permute(1, 2, 3, 0, 4).reshape(n, c, h, b * w)
        out = layer(folded)
        return out.reshape(n, c, h, b, w).permute(3, 0, 1, 2, 4)


class ConditionalUNet(nn.Module):
    """Noise predictor over condition-concatenated latents.

    Built without temporal/view layers for the single-image stage; the video
    stages add them zero-initialized, so loading earlier weights is exact.
    """

    def __init__(self, cfg: ModelConfig, with_temporal: bool = False, with_view: bool = False):
        super().__init__()
        self.cfg = cfg
        self.with_temporal = with_temporal
        self.with_view = with_view
        chans = cfg.unet_channels
        cond_ch = [2 * c for c in cfg.enc_channels]   # map + reference ladders

        self.t_mlp = nn.Sequential(
            nn.Linear(cfg.time_embed_dim, cfg.time_embed_dim),
            nn.SiLU(),
            nn.Linear(cfg.time_embed_dim, cfg.time_embed_dim),
        )

        self.stem = nn.Conv2d(cfg.latent_channels + cond_ch[0], chans[0], 3, padding=1)
        self.downsamples = nn.ModuleList()
        self.injects = nn.ModuleList()
        self.down_blocks = nn.ModuleList()
        for i, ch in enumerate(chans):
            if i > 0:
                self.downsamples.append(nn.Conv2d(chans[i - 1], ch, 3, stride=2, padding=1))
                self.injects.append(nn.Conv2d(ch + cond_ch[i], ch, 1))
            blocks = nn.ModuleList(
                Block(cfg, ch, ch, with_temporal, with_view)
                for _ in range(cfg.blocks_per_level)
            )
            self.down_blocks.append(blocks)

        self.mid_block1 = Block(cfg, chans[-1], chans[-1], with_temporal, with_view)
        self.mid_block2 = ResBlock(chans[-1], chans[-1], cfg.time_embed_dim, cfg.norm_groups)

        self.up_blocks = nn.ModuleList()
        self.upsamples = nn.ModuleList()
        for i, ch in reversed(list(enumerate(chans))):
            blocks = nn.ModuleList()
            for j in range(cfg.blocks_per_level):
                c_in = 2 * ch if j == 0 else ch
                blocks.append(Block(cfg, c_in, ch, with_temporal, with_view))
            self.up_blocks.append(blocks)
            if i > 0:
                self.upsamples.append(nn.Conv2d(ch, chans[i - 1], 3, padding=1))

        self.out_norm = nn.GroupNorm(cfg.norm_groups, chans[0])
        self.out_conv = nn.Conv2d(chans[0], cfg.latent_channels, 3, padding=1)
        nn.init.zeros_(self.out_conv.weight)
        nn.init.zeros_(self.out_conv.bias)

    def _check(self, z: torch.Tensor, cond: ConditionBundle, mode: str) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if len(cond.spatial) != len(self.cfg.unet_channels):
            raise ValueError("condition ladder depth must match UNet levels")
        if cond.spatial[0].shape[-2:] != z.shape[-2:]:
            raise ValueError("spatial conditions are not aligned with the latent")
        if cond.positional.shape[0] != z.shape[0] or cond.spatial[0].shape[0] != z.shape[0]:
            raise ValueError("condition frame count must match latent frame count")
        if mode in ("video", "multiview") and not self.with_temporal:
            raise ValueError(f"model was built without temporal layers; cannot run {mode}")
        if mode == "multiview":
            if not self.with_view:
                raise ValueError("model was built without view layers")
            if cond.view_count < 1 or z.shape[0] % cond.view_count:
                raise ValueError("frame count must be a multiple of view_count")
        elif cond.view_count != 1:
            raise ValueError(f"view_count={cond.view_count} requires multiview mode")

    def forward(
        self,
        z: torch.Tensor,
        t: torch.Tensor | int,
        cond: ConditionBundle,
        mode: str = "image",
        return_features: bool = False,
    ):
        """z (N, C, h, w), t scalar or (N,) -> noise estimate of the same shape."""
        self._check(z, cond, mode)
        n = z.shape[0]
        t = torch.as_tensor(t, device=z.device)
        if t.ndim == 0:
            t = t.expand(n)
        table = sinusoidal_positions(self.cfg.schedule_steps + 1, self.cfg.time_embed_dim,
                                     z.dtype, z.device)
        t_emb = self.t_mlp(table[t.long()])

        ref = cond.ref_image
        if ref is None:
            ref = [torch.zeros_like(s) for s in cond.spatial]

        x = self.stem(torch.cat([z, cond.spatial[0], ref[0]], dim=1))
        skips: list[torch.Tensor] = []
        features: list[torch.Tensor] = []
        for i, blocks in enumerate(self.down_blocks):
            if i > 0:
                x = self.downsamples[i - 1](x)
                x = self.injects[i - 1](torch.cat([x, cond.spatial[i], ref[i]], dim=1))
            for block in blocks:
                x = block(x, t_emb, cond, mode)
            skips.append(x)
            features.append(x)

        x = self.mid_block1(x, t_emb, cond, mode)
        x = self.mid_block2(x, t_emb)
        features.append(x)

        for lvl, blocks in enumerate(self.up_blocks):
            x = torch.cat([x, skips[len(skips) - 1 - lvl]], dim=1)
            for block in blocks:
                x = block(x, t_emb, cond, mode)
            if lvl < len(self.upsamples):
                x = F.interpolate(x, scale_factor=2, mode="nearest")
                x = self.upsamples[lvl](x)

        eps_hat = self.out_conv(F.silu(self.out_norm(x)))
        if return_features:
            return eps_hat, features
        return eps_hat
