from .attention import (
    CrossAttention,
    GatedSelfAttention,
    TemporalAttention,
    ViewAttention,
    view_adjacency_mask,
)
from .core import GenerativeCore
from .encoders import FrameCodec, PositionTokenizer, SpatialEncoder, StyleEmbedding, fourier_embed
from .sampler import sample_frames, sample_latents, sample_timesteps
from .schedule import NoiseSchedule, diffusion_loss, forward_diffuse, linear_schedule
from .unet import ConditionBundle, ConditionalUNet

__all__ = [
    "ConditionBundle",
    "ConditionalUNet",
    "CrossAttention",
    "FrameCodec",
    "GatedSelfAttention",
    "GenerativeCore",
    "NoiseSchedule",
    "PositionTokenizer",
    "SpatialEncoder",
    "StyleEmbedding",
    "TemporalAttention",
    "ViewAttention",
    "diffusion_loss",
    "forward_diffuse",
    "fourier_embed",
    "linear_schedule",
    "sample_frames",
    "sample_latents",
    "sample_timesteps",
    "view_adjacency_mask",
]
