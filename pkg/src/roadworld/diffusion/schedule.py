"""Noise schedule and the forward corruption process.

Timesteps are 1-indexed: t in [1, T].  alphas_cumprod[t-1] is the product
of (1 - beta) up to and including step t.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch


@dataclass(frozen=True)
class NoiseSchedule:
    betas: torch.Tensor            # (T,)
    alphas_cumprod: torch.Tensor   # (T,)

    def __post_init__(self) -> None:
        b = self.betas
        if b.ndim != 1 or len(b) < 1:
            raise ValueError("betas must be a non-empty 1D tensor")
        if torch.any(b <= 0) or torch.any(b >= 1):
            raise ValueError("betas must lie in (0, 1)")
        if torch.any(b[1:] < b[:-1]):
            raise ValueError("betas must be monotonically nondecreasing")
        a = self.alphas_cumprod
        if torch.any(a[1:] >= a[:-1]):
            raise ValueError("alphas_cumprod must be strictly decreasing")
        if a[0] <= 0.99:
            raise ValueError("alpha_bar at t=1 must exceed 0.99")

    @property
    def T(self) -> int:
        return len(self.betas)

    def alpha_bar(self, t: torch.Tensor | int) -> torch.Tensor:
        t = torch.as_tensor(t, dtype=torch.long)
        if torch.any(t < 1) or torch.any(t > self.T):
            raise ValueError(f"t must lie in [1, {self.T}]")
        return self.alphas_cumprod[t - 1]

    def to(self, dtype: torch.dtype) -> "NoiseSchedule":
        return NoiseSchedule(self.betas.to(dtype), self.alphas_cumprod.to(dtype))


def linear_schedule(
    steps: int = 1000,
    beta_start: float = 1e-4,
    beta_end: float = 2e-2,
    dtype: torch.dtype = torch.float32,
) -> NoiseSchedule:
    betas = torch.linspace(beta_start, beta_end, steps, dtype=torch.float64)
    alphas_cumprod = torch.cumprod(1.0 - betas, dim=0)
    return NoiseSchedule(betas.to(dtype), alphas_cumprod.to(dtype))


def forward_diffuse(
    z0: torch.Tensor,
    t: torch.Tensor | int,
    eps: torch.Tensor,
    schedule: NoiseSchedule,
) -> torch.Tensor:
    """z_t = sqrt(abar_t) * z0 + sqrt(1 - abar_t) * eps.

    t is a scalar or a per-frame tensor broadcast over the leading dim.
    """
    if eps.shape != z0.shape:
        raise ValueError("eps must match z0's shape")
    abar = schedule.alpha_bar(t).to(z0.dtype)
    if abar.ndim > 0:
        abar = abar.reshape(-1, *([1] * (z0.ndim - 1)))
    return torch.sqrt(abar) * z0 + torch.sqrt(1.0 - abar) * eps


def diffusion_loss(eps: torch.Tensor, eps_hat: torch.Tensor) -> torch.Tensor:
    """Mean squared error over all elements."""
    if eps.shape != eps_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(eps.shape)} vs {tuple(eps_hat.shape)}")
    return torch.mean((eps - eps_hat) ** 2)
