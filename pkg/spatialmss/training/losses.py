"""Multi-domain separation loss: frequency-domain MSE plus time-domain wSDR"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import torch

from spatialmss.errors import ShapeMismatchError

_TINY = 1e-24


@dataclass(frozen=True)
class LossConfig:
    freq_weight: float = 1.0
    time_weight: float = 1.0
    wsdr_enabled: bool = True

    def __post_init__(self):
        if self.freq_weight < 0 or self.time_weight < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.freq_weight == 0 and self.time_weight == 0:
            raise ValueError("loss weights cannot both be zero")


class LossTerms(NamedTuple):
    freq: torch.Tensor
    wsdr: torch.Tensor
    total: torch.Tensor


def freq_loss(pred_mags: torch.Tensor, target_mags: torch.Tensor) -> torch.Tensor:
    """mean squared magnitude error over sources, bins and frames"""
    if pred_mags.shape != target_mags.shape:
        raise ShapeMismatchError(
            f"prediction {tuple(pred_mags.shape)} != target {tuple(target_mags.shape)}"
        )
    return torch.mean((pred_mags - target_mags) ** 2)


def _cosine(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """cosine along the last axis; 0 where either vector is silent"""
    dot = (a * b).sum(dim=-1)
    energy = (a * a).sum(dim=-1) * (b * b).sum(dim=-1)
    cos = dot / energy.clamp_min(_TINY).sqrt()
    return torch.where(energy > _TINY, cos, torch.zeros_like(cos))


def wsdr_loss(
    est: torch.Tensor, target: torch.Tensor, mixture: torch.Tensor
) -> torch.Tensor:
    """energy-weighted negative cosine of sources and their complements

    Parameters
    ----------
    est, target : torch.tensor
        estimated and true source images, dim = (K, 2, L)
    mixture : torch.tensor
        mixture, dim = (2, L)

    Returns
    -------
    torch.tensor
        scalar in [-1, 1], averaged over sources and channels
    """
    if est.shape != target.shape or est.shape[-1] != mixture.shape[-1]:
        raise ShapeMismatchError("wSDR inputs must share their length")
    noise = mixture - target
    noise_est = mixture - est
    target_energy = (target**2).sum(dim=-1)
    noise_energy = (noise**2).sum(dim=-1)
    rho = target_energy / (target_energy + noise_energy).clamp_min(_TINY)
    loss = -rho * _cosine(target, est) - (1 - rho) * _cosine(noise, noise_est)
    return loss.mean()


def multi_domain_loss(
    cfg: LossConfig,
    pred_mags: torch.Tensor,
    target_mags: torch.Tensor,
    est: torch.Tensor,
    target: torch.Tensor,
    mixture: torch.Tensor,
) -> LossTerms:
    """freq_weight * freq_loss + time_weight * wsdr_loss"""
    freq = freq_loss(pred_mags, target_mags)
    if cfg.wsdr_enabled and cfg.time_weight > 0:
        wsdr = wsdr_loss(est, target, mixture)
    else:
        wsdr = torch.zeros((), dtype=freq.dtype)
    return LossTerms(freq, wsdr, cfg.freq_weight * freq + cfg.time_weight * wsdr)
