"""Recurrent condition dynamics: actions -> future structural-condition features.

Given the encoded frame-0 conditions, a hidden state is rolled forward one
driving action at a time through a gated recurrent cell; each step decodes
features shaped exactly like the map-encoder ladder and the box tokens, so
the denoiser consumes them through the same injection points as directly
encoded conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ModelConfig
from .diffusion.attention import single_head_attention
from .diffusion.core import GenerativeCore


@dataclass
class DynamicsState:
    """Recurrent state: hidden vector plus the stochastic latent and its Gaussian."""

    h: torch.Tensor
    s: torch.Tensor | None = None
    mu: torch.Tensor | None = None
    sigma: torch.Tensor | None = None


@dataclass
class StructuralFeature:
    """Decoded per-frame conditions at the feature level.

    map_feat is the flattened spatial ladder; box_feat holds one token per
    box slot.  Shapes mirror what the map encoder and position tokenizer
    produce for a single frame.
    """

    map_feat: torch.Tensor   # (flat_map_dim,)
    box_feat: torch.Tensor   # (N_B, pos_token_dim)

    def spatial_maps(self, cfg: ModelConfig) -> list[torch.Tensor]:
        """Reshape the flat vector into the per-level feature maps."""
        maps = []
        offset = 0
        for ch, (h, w) in zip(cfg.enc_channels, cfg.level_shapes()):
            n = ch * h * w
            maps.append(self.map_feat[offset : offset + n].reshape(ch, h, w))
            offset += n
        return maps


def flat_map_dim(cfg: ModelConfig) -> int:
    return sum(c * h * w for c, (h, w) in zip(cfg.enc_channels, cfg.level_shapes()))


class ActionEncoder(nn.Module):
    """Two-layer MLP over (speed, yaw); widths follow the 32/128 ladder."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d1, d2 = cfg.action_feat_dims
        self.fc1 = nn.Linear(2, d1)
        self.fc2 = nn.Linear(d1, d2)
        self.token_proj = nn.Linear(d1, d2)

    @staticmethod
    def normalize(actions: torch.Tensor) -> torch.Tensor:
        return actions / torch.tensor([30.0, math.pi], dtype=actions.dtype, device=actions.device)

    def forward(self, actions: torch.Tensor) -> torch.Tensor:
        """(..., 2) raw actions -> (..., d2) features."""
        return self.fc2(F.silu(self.fc1(self.normalize(actions))))

    def tokens(self, actions: torch.Tensor) -> torch.Tensor:
        """(..., 2) -> (..., 2 tokens, d2): both ladder features as tokens."""
        x1 = F.silu(self.fc1(self.normalize(actions)))
        x2 = self.fc2(x1)
        return torch.stack([self.token_proj(x1), x2], dim=-2)


class GRUCell(nn.Module):
    """Gated recurrent unit, h' = z * candidate + (1 - z) * h.

    The update gate saturating high therefore replaces the state with the
    candidate; saturating low keeps the previous state.  Gate chunks are
    ordered (reset, update, candidate).
    """

    def __init__(self, input_dim: int, hidden_dim: int):
        super().__init__()
        self.x_gates = nn.Linear(input_dim, 3 * hidden_dim)
        self.h_gates = nn.Linear(hidden_dim, 3 * hidden_dim)

    def forward(self, x: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
        xr, xz, xn = self.x_gates(x).chunk(3, dim=-1)
        hr, hz, hn = self.h_gates(h).chunk(3, dim=-1)
        r = torch.sigmoid(xr + hr)
        z = torch.sigmoid(xz + hz)
        n = torch.tanh(xn + r * hn)
        return z * n + (1.0 - z) * h


class TokenMixer(nn.Module):
    """One residual self-attention layer over a small token sequence."""

    def __init__(self, dim: int):
        super().__init__()
        self.norm = nn.LayerNorm(dim)
        self.qkv = nn.Linear(dim, 3 * dim)
        self.out = nn.Linear(dim, dim)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        q, k, v = self.qkv(self.norm(tokens)).chunk(3, dim=-1)
        return tokens + self.out(single_head_attention(q, k, v))


class ConditionDynamics(nn.Module):
    """Rolls structural conditions forward from driving actions.

    The frame-0 raster and boxes are encoded with the generator's own
    encoders (passed in, not owned), flattened into tokens, mixed by
    self-attention and an MLP into the initial hidden state.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        d_tok, d_h, d_s = cfg.dyn_token_dim, cfg.hidden_dim, cfg.stoch_dim
        self.level_proj = nn.ModuleList(
            nn.Linear(c * h * w, d_tok)
            for c, (h, w) in zip(cfg.enc_channels, cfg.level_shapes())
        )
        self.box_proj = nn.Linear(cfg.pos_token_dim, d_tok)
        self.mixer = TokenMixer(d_tok)
        self.to_hidden = nn.Sequential(nn.Linear(d_tok, d_h), nn.SiLU(), nn.Linear(d_h, d_h))

        self.action_encoder = ActionEncoder(cfg)
        d_act = cfg.action_feat_dims[-1]
        self.ca_q = nn.Linear(d_h, d_h)
        self.ca_kv = nn.Linear(d_act, 2 * d_h)
        self.ca_out = nn.Linear(d_h, d_h)
        self.mu_head = nn.Linear(d_h, d_s)
        self.sigma_head = nn.Linear(d_h, d_s)

        self.cell = GRUCell(d_s, d_h)

        out_dim = flat_map_dim(cfg) + cfg.n_boxes * cfg.pos_token_dim
        self.decoder = nn.Sequential(
            nn.Linear(d_h + d_act, cfg.dyn_decoder_hidden),
            nn.SiLU(),
            nn.Linear(cfg.dyn_decoder_hidden, out_dim),
        )

    def encode_initial(
        self,
        raster: torch.Tensor,        # (3, H, W) or (1, 3, H, W)
        boxes: torch.Tensor,         # (N_B, 16)
        categories: torch.Tensor,    # (N_B,)
        core: GenerativeCore,
    ) -> torch.Tensor:
        """Frame-0 conditions -> initial hidden state h_0 (deterministic)."""
        if raster.ndim == 3:
            raster = raster.unsqueeze(0)
        maps = core.map_encoder(raster)
        box_tokens = core.position_tokenizer(boxes.unsqueeze(0), categories.unsqueeze(0))
        return self.from_encoded([m[0] for m in maps], box_tokens[0])

    def from_encoded(self, maps: list[torch.Tensor], box_tokens: torch.Tensor) -> torch.Tensor:
        """Hidden state from already-encoded per-frame features."""
        level_tokens = [proj(m.reshape(-1)) for proj, m in zip(self.level_proj, maps)]
        tokens = torch.stack(level_tokens + list(self.box_proj(box_tokens)), dim=0)
        mixed = self.mixer(tokens.unsqueeze(0))[0]
        return self.to_hidden(mixed.mean(dim=0))

    def latent_sample(
        self,
        h: torch.Tensor,
        action: torch.Tensor,
        mode: str = "mean",
        noise: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Cross-attend the hidden state to the action; return (s, mu, sigma).

        mode "mean" returns s = mu exactly; "stochastic" reparameterizes with
        standard-normal noise (injectable for tests).
        """
        if mode not in ("mean", "stochastic"):
            raise ValueError(f"unknown mode {mode!r}")
        act_tokens = self.action_encoder.tokens(action)
        q = self.ca_q(h).unsqueeze(0).unsqueeze(0)
        k, v = self.ca_kv(act_tokens).chunk(2, dim=-1)
        attended = single_head_attention(q, k.unsqueeze(0), v.unsqueeze(0))[0, 0]
        feat = h + self.ca_out(attended)
        mu = self.mu_head(feat)
        sigma = F.softplus(self.sigma_head(feat))
        if mode == "mean":
            return mu, mu, sigma
        if noise is None:
            noise = torch.randn_like(mu)
        return mu + sigma * noise, mu, sigma

    def step(self, h: torch.Tensor, s: torch.Tensor) -> torch.Tensor:
        """Deterministic recurrent update h_{t+1} = GRU(h_t, s_t)."""
        return self.cell(s, h)

    def decode_conditions(self, h: torch.Tensor, action: torch.Tensor) -> StructuralFeature:
        """Hidden state + action -> feature-level map ladder and box tokens."""
        af = self.action_encoder(action)
        out = self.decoder(torch.cat([h, af], dim=-1))
        split = flat_map_dim(self.cfg)
        return StructuralFeature(
            out[:split], out[split:].reshape(self.cfg.n_boxes, self.cfg.pos_token_dim)
        )

    def rollout(
        self,
        h0: torch.Tensor,
        actions: torch.Tensor,        # (T, 2)
        mode: str = "mean",
        noise: torch.Tensor | None = None,   # (T, d_s) for stochastic tests
    ) -> tuple[list[StructuralFeature], list[DynamicsState]]:
        """Iterate latent_sample -> step -> decode; one feature per action."""
        if actions.ndim != 2 or actions.shape[0] < 1:
            raise ValueError("need at least one action")
        h = h0
        features: list[StructuralFeature] = []
        states: list[DynamicsState] = []
        for t in range(actions.shape[0]):
            step_noise = noise[t] if noise is not None else None
            s, mu, sigma = self.latent_sample(h, actions[t], mode, step_noise)
            h = self.step(h, s)
            features.append(self.decode_conditions(h, actions[t]))
            states.append(DynamicsState(h=h, s=s, mu=mu, sigma=sigma))
        return features, states


def features_to_bundle_inputs(
    cfg: ModelConfig, features: list[StructuralFeature]
) -> tuple[list[torch.Tensor], torch.Tensor]:
    """Stack per-frame decoded features into UNet condition tensors.

    Returns (spatial ladder list, positional tokens) shaped exactly like the
    outputs of the map encoder and position tokenizer over the same frames.
    """
    spatial = [
        torch.stack([f.spatial_maps(cfg)[i] for f in features])
        for i in range(len(cfg.enc_channels))
    ]
    positional = torch.stack([f.box_feat for f in features])
    return spatial, positional
