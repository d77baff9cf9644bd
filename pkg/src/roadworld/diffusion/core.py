"""The conditional generator: encoders + codec + UNet under one module."""

from __future__ import annotations

import torch
import torch.nn as nn

from ..config import ModelConfig
from .encoders import FrameCodec, PositionTokenizer, SpatialEncoder, StyleEmbedding
from .schedule import NoiseSchedule, linear_schedule
from .unet import ConditionBundle, ConditionalUNet


class GenerativeCore(nn.Module):
    """Everything needed to train and sample the conditional denoiser.

    Stage tags map to architecture flags: the image stage has no temporal or
    view layers; the video stages add them with zero-initialized outputs so
    earlier weights load unmodified and the function is unchanged at load.
    """

    def __init__(self, cfg: ModelConfig, with_temporal: bool = False, with_view: bool = False):
        super().__init__()
        self.cfg = cfg
        self.codec = FrameCodec(cfg) if cfg.latent_channels == 3 else None
        self.map_encoder = SpatialEncoder(cfg)
        self.ref_encoder = SpatialEncoder(cfg)
        self.position_tokenizer = PositionTokenizer(cfg)
        self.style_embed = StyleEmbedding(cfg)
        self.unet = ConditionalUNet(cfg, with_temporal, with_view)
        self.schedule: NoiseSchedule = linear_schedule(
            cfg.schedule_steps, cfg.beta_start, cfg.beta_end
        )

    @property
    def with_temporal(self) -> bool:
        return self.unet.with_temporal

    @property
    def with_view(self) -> bool:
        return self.unet.with_view

    def encode_conditions(
        self,
        rasters: torch.Tensor,          # (N, 3, H, W) binary map rasters
        boxes: torch.Tensor,            # (N, N_B, 16)
        categories: torch.Tensor,       # (N, N_B) long
        weather: torch.Tensor,          # (N,) long
        timeofday: torch.Tensor,        # (N,) long
        ref_frame: torch.Tensor | None = None,   # (1 or N, 3, H, W) pixels
        view_count: int = 1,
    ) -> ConditionBundle:
        n = rasters.shape[0]
        spatial = self.map_encoder(rasters)
        ref = None
        if ref_frame is not None:
            ref = self.ref_encoder(ref_frame)
            if ref_frame.shape[0] == 1 and n > 1:
                ref = [r.expand(n, -1, -1, -1) for r in ref]
        positional = self.position_tokenizer(boxes, categories)
        style = self.style_embed(weather, timeofday)
        return ConditionBundle(spatial, positional, style, ref, view_count)

    def predict_noise(
        self,
        z_t: torch.Tensor,
        t: torch.Tensor | int,
        cond: ConditionBundle,
        mode: str = "image",
        return_features: bool = False,
    ):
        return self.unet(z_t, t, cond, mode, return_features)

    def schedule_for(self, dtype: torch.dtype) -> NoiseSchedule:
        return self.schedule.to(dtype)
