"""Reverse-process samplers.

The deterministic sampler is the zero-noise variant: each step forms the
denoised estimate from the predicted noise and re-noises it at the next
timestep without fresh randomness, so outputs are bit-reproducible given
(weights, conditions, seed).  The ancestral sampler draws posterior noise
at every step.
"""

from __future__ import annotations

import torch

from .core import GenerativeCore
from .unet import ConditionBundle


def sample_timesteps(total: int, n_steps: int) -> list[int]:
    """Descending subset of [1, total] with n_steps entries, endpoints included."""
    if not 1 <= n_steps <= total:
        raise ValueError("n_steps must lie in [1, T]")
    if n_steps == 1:
        return [total]
    grid = torch.linspace(total, 1, n_steps)
    ts = sorted({int(round(float(v))) for v in grid}, reverse=True)
    return ts


@torch.no_grad()
def sample_latents(
    core: GenerativeCore,
    cond: ConditionBundle,
    n_steps: int,
    seed: int,
    mode: str = "image",
    sampler: str = "deterministic",
    clip_denoised: bool = True,
) -> torch.Tensor:
    """Iteratively denoise a standard-normal latent under the conditions."""
    if sampler not in ("deterministic", "ancestral"):
        raise ValueError(f"unknown sampler {sampler!r}")
    cfg = core.cfg
    sched = core.schedule
    n = cond.frames()
    gen = torch.Generator().manual_seed(seed)
    z = torch.randn(n, cfg.latent_channels, cfg.latent_height, cfg.latent_width, generator=gen)

    ts = sample_timesteps(sched.T, n_steps)
    for i, t in enumerate(ts):
        eps_hat = core.predict_noise(z, t, cond, mode)
        abar_t = sched.alpha_bar(t)
        z0_hat = (z - torch.sqrt(1 - abar_t) * eps_hat) / torch.sqrt(abar_t)
        if clip_denoised:
            z0_hat = z0_hat.clamp(-1.0, 1.0)
        t_prev = ts[i + 1] if i + 1 < len(ts) else 0
        abar_prev = sched.alpha_bar(t_prev) if t_prev >= 1 else torch.ones(())
        if sampler == "deterministic":
            z = torch.sqrt(abar_prev) * z0_hat + torch.sqrt(1 - abar_prev) * eps_hat
        else:
            # ancestral: posterior mean plus scaled fresh noise
            alpha_t = abar_t / (sched.alpha_bar(t_prev) if t_prev >= 1 else torch.ones(()))
            var = (1 - abar_prev) / (1 - abar_t) * (1 - alpha_t)
            mean = torch.sqrt(abar_prev) * z0_hat + torch.sqrt((1 - abar_prev - var).clamp(min=0)) * eps_hat
            noise = torch.randn(z.shape, generator=gen) if t_prev >= 1 else torch.zeros_like(z)
            z = mean + torch.sqrt(var.clamp(min=0)) * noise
    return z


@torch.no_grad()
def sample_frames(
    core: GenerativeCore,
    cond: ConditionBundle,
    n_steps: int,
    seed: int,
    mode: str = "image",
    sampler: str = "deterministic",
) -> torch.Tensor:
    """Sample latents and decode to (N, 3, H, W) pixels in [0, 1]."""
    if core.codec is None:
        raise ValueError("core has no frame codec; cannot decode to pixels")
    z = sample_latents(core, cond, n_steps, seed, mode, sampler)
    return core.codec.decode(z).clamp(0.0, 1.0)
