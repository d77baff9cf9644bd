"""Attention layers used inside the denoising UNet.

Every layer here is residual with a zero-initialized output path (and the
gated layer additionally a tanh gate initialized at zero), so a freshly
added layer computes the identity.  That property is what makes stage
chaining exact: loading an image-stage checkpoint into a video-stage model
changes nothing until training moves the new weights.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn

from ..config import ModelConfig


def single_head_attention(
    q: torch.Tensor, k: torch.Tensor, v: torch.Tensor, mask: torch.Tensor | None = None
) -> torch.Tensor:
    """Plain softmax attention; q (B, Lq, D), k/v (B, Lk, D), mask (Lq, Lk) bool."""
    logits = q @ k.transpose(-1, -2) / math.sqrt(q.shape[-1])
    if mask is not None:
        logits = logits.masked_fill(~mask, float("-inf"))
    return torch.softmax(logits, dim=-1) @ v


class GatedSelfAttention(nn.Module):
    """Residual attention over [visual tokens | position tokens], tanh-gated.

    Token selection keeps only the visual rows of the joint attention output,
    so the visual token count is preserved regardless of the box slot count.
    """

    def __init__(self, channels: int, pos_token_dim: int):
        super().__init__()
        self.norm = nn.LayerNorm(channels)
        self.pos_proj = nn.Linear(pos_token_dim, channels)
        self.qkv = nn.Linear(channels, 3 * channels)
        self.out = nn.Linear(channels, channels)
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)
        self.gate = nn.Parameter(torch.zeros(()))

    def forward(self, visual: torch.Tensor, pos_tokens: torch.Tensor) -> torch.Tensor:
        """visual (B, L, C), pos_tokens (B, N_B, pos_dim) -> (B, L, C)."""
        if pos_tokens.shape[-1] != self.pos_proj.in_features:
            raise ValueError("position token dim mismatch")
        n_visual = visual.shape[1]
        joint = torch.cat([self.norm(visual), self.pos_proj(pos_tokens)], dim=1)
        q, k, v = self.qkv(joint).chunk(3, dim=-1)
        attended = single_head_attention(q, k, v)
        selected = self.out(attended[:, :n_visual])
        return visual + torch.tanh(self.gate) * selected


class CrossAttention(nn.Module):
    """Residual cross-attention from visual tokens to a small token set."""

    def __init__(self, channels: int, context_dim: int):
        super().__init__()
        self.norm = nn.LayerNorm(channels)
        self.q = nn.Linear(channels, channels)
        self.kv = nn.Linear(context_dim, 2 * channels)
        self.out = nn.Linear(channels, channels)
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    def forward(self, visual: torch.Tensor, context: torch.Tensor) -> torch.Tensor:
        """visual (B, L, C), context (B, S, context_dim) -> (B, L, C)."""
        q = self.q(self.norm(visual))
        k, v = self.kv(context).chunk(2, dim=-1)
        return visual + self.out(single_head_attention(q, k, v))


def sinusoidal_positions(n: int, dim: int, dtype: torch.dtype, device) -> torch.Tensor:
    """Standard sinusoidal position table, (n, dim)."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(10_000.0) * torch.arange(half, dtype=dtype, device=device) / max(half - 1, 1)
    )
    ang = torch.arange(n, dtype=dtype, device=device).unsqueeze(1) * freqs
    table = torch.cat([torch.sin(ang), torch.cos(ang)], dim=1)
    if table.shape[1] < dim:  # odd dims
        table = torch.cat([table, torch.zeros(n, dim - table.shape[1], dtype=dtype, device=device)], dim=1)
    return table


class AxisAttention(nn.Module):
    """Self-attention across one grouping axis at every spatial location.

    With axis length N the input (N, C, h, w) is reshaped so each spatial
    location contributes a sequence of N tokens of dim C.  Used both for
    frame-wise (temporal) and view-wise attention; view-wise passes an
    adjacency mask and no position table.
    """

    def __init__(self, channels: int, use_positions: bool = True):
        super().__init__()
        self.norm = nn.LayerNorm(channels)
        self.qkv = nn.Linear(channels, 3 * channels)
        self.out = nn.Linear(channels, channels)
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)
        self.use_positions = use_positions

    def attention_weights(self, x: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
        """Expose the (B, N, N) softmax matrix for inspection in tests."""
        seq = self._to_sequences(x)
        q, k, _ = self.qkv(self.norm(seq)).chunk(3, dim=-1)
        logits = q @ k.transpose(-1, -2) / math.sqrt(q.shape[-1])
        if mask is not None:
            logits = logits.masked_fill(~mask, float("-inf"))
        return torch.softmax(logits, dim=-1)

    def _to_sequences(self, x: torch.Tensor) -> torch.Tensor:
        n, c, h, w = x.shape
        seq = x.permute(2, 3, 0, 1).reshape(h * w, n, c)
        if self.use_positions:
            seq = seq + sinusoidal_positions(n, c, x.dtype, x.device)
        return seq

    def forward(self, x: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
        """(N, C, h, w) -> same shape; mask is an (N, N) bool adjacency."""
        n, c, h, w = x.shape
        seq = self._to_sequences(x)
        q, k, v = self.qkv(self.norm(seq)).chunk(3, dim=-1)
        attended = self.out(single_head_attention(q, k, v, mask))
        return x + attended.reshape(h, w, n, c).permute(2, 3, 0, 1)


def view_adjacency_mask(n_views: int, topology: str = "line") -> torch.Tensor:
    """(V, V) bool mask: each view attends to itself and immediate neighbors."""
    idx = torch.arange(n_views)
    diff = (idx.unsqueeze(0) - idx.unsqueeze(1)).abs()
    mask = diff <= 1
    if topology == "ring" and n_views > 2:
        mask |= diff == n_views - 1
    elif topology not in ("line", "ring"):
        raise ValueError(f"unknown view topology {topology!r}")
    return mask


class TemporalAttention(AxisAttention):
    """Frame-axis attention with sinusoidal temporal positions."""

    def __init__(self, channels: int):
        super().__init__(channels, use_positions=True)


class ViewAttention(AxisAttention):
    """View-axis attention restricted to adjacent views."""

    def __init__(self, channels: int, n_views: int, topology: str = "line"):
        super().__init__(channels, use_positions=False)
        self.register_buffer("mask", view_adjacency_mask(n_views, topology), persistent=False)

    def forward(self, x: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
        return super().forward(x, self.mask if mask is None else mask)
