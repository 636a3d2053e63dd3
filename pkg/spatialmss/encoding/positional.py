"""Signed sinusoidal positional encoding of panning angles.

Positive angles use the Transformer-style kernel sin/cos(alpha / 45^(2i/D));
negative angles flip the exponent to (D - 2i)/D so the fast-changing ripple sits
at the opposite end of the vector. D = 1 is the raw-angle case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from spatialmss.mixing.panning import PANORAMA_LIMIT, AngleSpec, as_angle

DEFAULT_DIM = 1024
BASE = 45.0


@dataclass(frozen=True)
class EmbeddingConfig:
    """Embedding dimension D and mode

    Parameters
    ----------
    dim : int
        D, forced to 1 in raw mode and required even in sinusoidal mode
    mode : str
        "raw" or "sinusoidal"
    unit : str
        how the quotient alpha / 45^(.) is fed to sin/cos: "radian" uses it
        as-is, "degree" converts it to radians first
    """

    dim: int = DEFAULT_DIM
    mode: Literal["raw", "sinusoidal"] = "sinusoidal"
    unit: Literal["radian", "degree"] = "radian"

    def __post_init__(self):
        if self.mode == "raw":
            object.__setattr__(self, "dim", 1)
        elif self.mode == "sinusoidal":
            if self.dim <= 0 or self.dim % 2:
                raise ValueError(f"sinusoidal D must be positive and even, got {self.dim}")
        else:
            raise ValueError(f"unknown embedding mode {self.mode!r}")
        if self.unit not in ("radian", "degree"):
            raise ValueError(f"unknown unit {self.unit!r}")

    @classmethod
    def raw(cls) -> EmbeddingConfig:
        return cls(dim=1, mode="raw")


@dataclass(frozen=True)
class SpatialEmbedding:
    values: np.ndarray
    source_angle: AngleSpec

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or not np.all(np.isfinite(values)):
            raise ValueError("embedding must be a finite vector")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform angle noise e ~ U(-delta, delta) in degrees"""

    delta: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def _kernel(alpha: float, exponents: np.ndarray, dim: int, unit: str) -> np.ndarray:
    arg = alpha / BASE**exponents
    if unit == "degree":
        arg = np.radians(arg)
    values = np.empty(dim)
    values[0::2] = np.sin(arg)
    values[1::2] = np.cos(arg)
    return values


def _check_dim(dim: int):
    if dim <= 0 or dim % 2:
        raise ValueError(f"D must be a positive even integer, got {dim}")


def encode_positive(alpha: float, dim: int, unit: str = "radian") -> SpatialEmbedding:
    """P(2i) = sin(alpha / 45^(2i/D)), P(2i+1) = cos(alpha / 45^(2i/D))"""
    if alpha < 0:
        raise ValueError("use encode_negative")
    _check_dim(dim)
    angle = AngleSpec(alpha)
    exponents = 2 * np.arange(dim // 2) / dim
    return SpatialEmbedding(_kernel(angle.degrees, exponents, dim, unit), angle)


def encode_negative(alpha: float, dim: int, unit: str = "radian") -> SpatialEmbedding:
    """N(2i) = sin(alpha / 45^((D-2i)/D)), N(2i+1) = cos(alpha / 45^((D-2i)/D))

    Evaluated on the signed alpha.
    """
    if alpha > 0:
        raise ValueError("use encode_positive")
    _check_dim(dim)
    angle = AngleSpec(alpha)
    exponents = (dim - 2 * np.arange(dim // 2)) / dim
    return SpatialEmbedding(_kernel(angle.degrees, exponents, dim, unit), angle)


def encode(angle: AngleSpec, cfg: EmbeddingConfig) -> SpatialEmbedding:
    angle = as_angle(angle)
    if cfg.mode == "raw":
        return SpatialEmbedding(np.array([angle.degrees]), angle)
    if angle.degrees >= 0:
        return encode_positive(angle.degrees, cfg.dim, cfg.unit)
    return encode_negative(angle.degrees, cfg.dim, cfg.unit)


def encode_grid(angles: Sequence[float], cfg: EmbeddingConfig) -> np.ndarray:
    """(len(angles), D) matrix of embeddings, one row per angle"""
    return np.stack([encode(AngleSpec(a), cfg).values for a in angles])


def clamp_angle(degrees: float) -> float:
    return min(max(degrees, -PANORAMA_LIMIT), PANORAMA_LIMIT)


def perturb_angle(
    angle: AngleSpec, noise: NoiseSpec, rng: Optional[np.random.Generator] = None
) -> AngleSpec:
    """noisy angle clamp(alpha + u, -45, 45), u ~ U(-delta, delta)

    The draw comes from `rng` when given, otherwise from a generator seeded by
    `noise.seed`.
    """
    angle = as_angle(angle)
    if noise.delta == 0:
        return angle
    rng = noise.generator() if rng is None else rng
    u = float(rng.uniform(-noise.delta, noise.delta))
    return AngleSpec(clamp_angle(angle.degrees + u))


def perturb_angles(
    angles: Sequence[AngleSpec],
    noise: NoiseSpec,
    rng: Optional[np.random.Generator] = None,
) -> list[AngleSpec]:
    """independent noisy draws for each angle from one seeded generator"""
    rng = noise.generator() if rng is None else rng
    return [perturb_angle(a, noise, rng) for a in angles]


def embedding_distance(a: SpatialEmbedding, b: SpatialEmbedding) -> float:
    return float(math.sqrt(np.sum((a.values - b.values) ** 2)))

