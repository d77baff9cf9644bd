"""Model-wide configuration shared by the generator, dynamics and training code.

A single frozen dataclass pins every architectural size so that checkpoints
can be hashed and compatibility-checked.  The default values are the desk
scale: 128x64 frames, a 4x downsampled 3-channel latent, and a three-level
UNet that trains in minutes on a laptop CPU.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class ModelConfig:
    # observation space
    frame_width: int = 128
    frame_height: int = 64
    latent_downsample: int = 4
    latent_channels: int = 3

    # structured conditions
    n_boxes: int = 16                     # zero-padded box slots per frame
    n_categories: int = 6                 # index 0 reserved for padding
    fourier_bands: int = 8                # 16 coords * 2 * 8 = 256 features
    cat_embed_dim: int = 16
    pos_hidden_dim: int = 128             # 512 at paper scale
    pos_token_dim: int = 64               # 768 at paper scale
    weather_count: int = 3                # sunny / rain / night-clear
    timeofday_count: int = 2              # day / night
    style_dim: int = 64

    # spatial condition encoder ladder; one output per UNet level
    enc_channels: tuple[int, ...] = (4, 4, 8)
    enc_strides: tuple[int, ...] = (4, 2, 2)

    # denoising UNet
    unet_channels: tuple[int, ...] = (32, 64, 128)
    blocks_per_level: int = 2
    time_embed_dim: int = 128
    norm_groups: int = 4
    view_count: int = 3
    view_adjacency: str = "line"          # "line" or "ring"

    # noise schedule
    schedule_steps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    sample_steps: int = 50

    # recurrent condition dynamics
    hidden_dim: int = 256                 # recurrent state size
    stoch_dim: int = 32                   # stochastic latent size
    action_feat_dims: tuple[int, ...] = (32, 128)
    dyn_token_dim: int = 128
    dyn_decoder_hidden: int = 512

    # action prediction head
    future_actions: int = 8               # predicted (speed, yaw) pairs
    past_actions: int = 8

    def __post_init__(self) -> None:
        if self.frame_width % self.latent_downsample or self.frame_height % self.latent_downsample:
            raise ValueError("frame size must be divisible by latent_downsample")
        if len(self.enc_channels) != len(self.unet_channels):
            raise ValueError("need one encoder ladder output per UNet level")
        if len(self.enc_strides) != len(self.enc_channels):
            raise ValueError("enc_strides and enc_channels must align")
        if self.enc_strides[0] != self.latent_downsample:
            raise ValueError("first encoder stride must match latent_downsample")
        if self.view_adjacency not in ("line", "ring"):
            raise ValueError(f"unknown view adjacency {self.view_adjacency!r}")
        for c in self.unet_channels:
            if c % self.norm_groups:
                raise ValueError("unet channels must be divisible by norm_groups")

    @property
    def latent_height(self) -> int:
        return self.frame_height // self.latent_downsample

    @property
    def latent_width(self) -> int:
        return self.frame_width // self.latent_downsample

    def level_shapes(self) -> list[tuple[int, int]]:
        """(height, width) of each UNet level, top resolution first."""
        shapes = []
        h, w = self.frame_height, self.frame_width
        for s in self.enc_strides:
            h, w = h // s, w // s
            shapes.append((h, w))
        return shapes

    def fourier_dim(self) -> int:
        return 16 * 2 * self.fourier_bands

    def config_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def tiny_config() -> ModelConfig:
    """Minimal config used by gradient checks: 4x4 latent, 2 levels."""
    return ModelConfig(
        frame_width=16,
        frame_height=16,
        latent_channels=8,
        n_boxes=2,
        n_categories=3,
        cat_embed_dim=4,
        pos_hidden_dim=16,
        pos_token_dim=8,
        style_dim=8,
        enc_channels=(2, 2),
        enc_strides=(4, 2),
        unet_channels=(8, 16),
        blocks_per_level=1,
        time_embed_dim=16,
        hidden_dim=16,
        stoch_dim=4,
        action_feat_dims=(8, 16),
        dyn_token_dim=8,
        dyn_decoder_hidden=16,
        future_actions=2,
        past_actions=2,
    )


def config_from_dict(d: dict) -> ModelConfig:
    d = dict(d)
    for k in ("enc_channels", "enc_strides", "unet_channels", "action_feat_dims"):
        if k in d:
            d[k] = tuple(d[k])
    return ModelConfig(**d)
