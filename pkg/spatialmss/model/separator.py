# A toy-scale cross-stream separator: K per-source streams over conditioned
# stacked-magnitude frames, one averaging junction shared by all streams, and a
# sigmoid mask head per stream applied to the mixture STFT.

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn

from spatialmss.audio.signal import (
    DEFAULT_FRAME_SIZE,
    DEFAULT_HOP,
    DEFAULT_SAMPLE_RATE,
    Spectrogram,
    StereoSignal,
    istft_tensor,
    stft_tensor,
)
from spatialmss.conditioning.conditioning import (
    ConditionMode,
    condition_tensor,
    required_dim,
)
from spatialmss.encoding.positional import EmbeddingConfig, SpatialEmbedding, encode
from spatialmss.errors import ShapeMismatchError
from spatialmss.mixing.panning import AngleSpec, as_angle
from utilities.ss_utils import standardize_stats

DTYPE = torch.float64


class ParameterShape(NamedTuple):
    name: str
    shape: Tuple[int, ...]
    fan_in: int


@dataclass(frozen=True)
class SeparatorConfig:
    """Architecture and signal settings stored alongside the parameters"""

    n_sources: int = 4
    frame_size: int = DEFAULT_FRAME_SIZE
    hop: int = DEFAULT_HOP
    hidden_size: int = 128
    condition_mode: ConditionMode = ConditionMode.CAT
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig.raw)
    sample_rate: int = DEFAULT_SAMPLE_RATE
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "condition_mode", ConditionMode(self.condition_mode))
        if self.n_sources < 2:
            raise ValueError("K ≥ 2 required")
        if not self.labels:
            labels = tuple(f"source{k}" for k in range(self.n_sources))
            object.__setattr__(self, "labels", labels)
        if len(self.labels) != self.n_sources:
            raise ShapeMismatchError("one label per source is required")

    @property
    def two_f(self) -> int:
        return 2 * (self.frame_size // 2 + 1)

    @property
    def input_dim(self) -> int:
        return required_dim(self.condition_mode, self.two_f, self.embedding.dim)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["condition_mode"] = self.condition_mode.value
        d["labels"] = list(self.labels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SeparatorConfig:
        d = dict(d)
        d["embedding"] = EmbeddingConfig(**d["embedding"])
        d["labels"] = tuple(d.get("labels", ()))
        return cls(**d)


def init_parameters(shape_spec: Sequence[ParameterShape], seed: int) -> torch.Tensor:
    """flat vector, each view uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]"""
    generator = torch.Generator().manual_seed(seed)
    chunks = []
    for spec in shape_spec:
        bound = 1.0 / np.sqrt(spec.fan_in)
        n = int(np.prod(spec.shape))
        draws = torch.rand(n, generator=generator, dtype=DTYPE)
        chunks.append((2 * draws - 1) * bound)
    return torch.cat(chunks)


@dataclass
class MaskSet:
    """K masks of shape (2F, T), entries in [0, 1]"""

    masks: np.ndarray

    def __post_init__(self):
        self.masks = np.asarray(self.masks, dtype=np.float64)
        if self.masks.ndim != 3 or self.masks.shape[1] % 2:
            raise ShapeMismatchError(f"expected (K, 2F, T) masks, got {self.masks.shape}")
        if np.any(self.masks < 0) or np.any(self.masks > 1):
            raise ValueError("mask entries must lie in [0, 1]")

    def __len__(self) -> int:
        return self.masks.shape[0]


class SeparatorModel(nn.Module):
    def __init__(self, cfg: SeparatorConfig = SeparatorConfig(), seed: int = 0):
        """K parallel streams with a cross-stream averaging junction

        Parameters
        ----------
        cfg : SeparatorConfig
            source count, STFT geometry, hidden size and conditioning
        seed : int
            seed of the uniform parameter initialisation
        """
        super(SeparatorModel, self).__init__()
        self.cfg = cfg
        self.seed = seed
        k, h, two_f = cfg.n_sources, cfg.hidden_size, cfg.two_f

        # per-stream layers stacked on a leading K axis
        self.encoder_weight = nn.Parameter(torch.empty(k, h, cfg.input_dim, dtype=DTYPE))
        self.encoder_bias = nn.Parameter(torch.empty(k, h, dtype=DTYPE))
        self.trunk_weight = nn.Parameter(torch.empty(k, h, h, dtype=DTYPE))
        self.trunk_bias = nn.Parameter(torch.empty(k, h, dtype=DTYPE))
        self.mask_weight = nn.Parameter(torch.empty(k, two_f, h, dtype=DTYPE))
        self.mask_bias = nn.Parameter(torch.empty(k, two_f, dtype=DTYPE))

        self.register_buffer("input_mean", torch.zeros(two_f, dtype=DTYPE))
        self.register_buffer("input_scale", torch.ones(two_f, dtype=DTYPE))

        self.load_flat_parameters(init_parameters(self.parameter_shapes(), seed))

    @property
    def n_sources(self) -> int:
        return self.cfg.n_sources

    @property
    def condition_mode(self) -> ConditionMode:
        return self.cfg.condition_mode

    def parameter_shapes(self) -> List[ParameterShape]:
        """named views of the flat parameter vector, in order"""
        fan_in = {
            "encoder": self.cfg.input_dim,
            "trunk": self.cfg.hidden_size,
            "mask": self.cfg.hidden_size,
        }
        return [
            ParameterShape(name, tuple(p.shape), fan_in[name.split("_")[0]])
            for name, p in self.named_parameters()
        ]

    def flat_parameters(self) -> torch.Tensor:
        return nn.utils.parameters_to_vector(self.parameters()).detach().clone()

    def load_flat_parameters(self, vector: torch.Tensor):
        with torch.no_grad():
            nn.utils.vector_to_parameters(vector.to(DTYPE), self.parameters())

    def fit_normalization(self, frames: torch.Tensor):
        """sets per-row input statistics from (n_frames, 2F) training magnitudes"""
        mean, scale = standardize_stats(frames, dim=0)
        self.input_mean.copy_(mean)
        self.input_scale.copy_(scale)

    def embed(self, angles: Sequence[AngleSpec]) -> torch.Tensor:
        """(K, D) embedding matrix for a stream's angles; (K, 0) for NONE"""
        if self.condition_mode is ConditionMode.NONE:
            return torch.zeros(self.n_sources, 0, dtype=DTYPE)
        if len(angles) != self.n_sources:
            raise ShapeMismatchError(
                f"model has {self.n_sources} streams, got {len(angles)} angles"
            )
        values = [encode(as_angle(a), self.cfg.embedding).values for a in angles]
        return torch.from_numpy(np.stack(values))

    def forward(self, mix_mag: torch.Tensor, embeddings: torch.Tensor) -> torch.Tensor:
        """per-frame masks from a stacked mixture magnitude

        Parameters
        ----------
        mix_mag : torch.tensor
            stacked magnitude, dim = (2F, T)
        embeddings : torch.tensor
            one spatial embedding per stream, dim = (K, D); ignored for NONE

        Returns
        -------
        torch.tensor, dim = (K, 2F, T)
            sigmoid masks, one per stream
        """
        k = self.n_sources
        x = (mix_mag.transpose(0, 1) - self.input_mean) / self.input_scale
        x = x.unsqueeze(0).expand(k, *x.shape)
        if self.condition_mode is not ConditionMode.NONE and embeddings.shape[0] != k:
            raise ShapeMismatchError(f"expected {k} embeddings, got {embeddings.shape[0]}")
        conditioned = condition_tensor(self.condition_mode, x, embeddings.unsqueeze(1))

        hidden = torch.tanh(
            torch.einsum("kti,khi->kth", conditioned, self.encoder_weight)
            + self.encoder_bias.unsqueeze(1)
        )
        # cross-stream junction: every trunk sees the average of all encoders
        shared = hidden.mean(dim=0)
        trunk = torch.tanh(
            torch.einsum("th,kgh->ktg", shared, self.trunk_weight)
            + self.trunk_bias.unsqueeze(1)
        )
        masks = torch.sigmoid(
            torch.einsum("ktg,kog->kto", trunk, self.mask_weight)
            + self.mask_bias.unsqueeze(1)
        )
        return masks.transpose(1, 2)


def mask_spectrum(masks: torch.Tensor, mix_spec: torch.Tensor) -> torch.Tensor:
    """applies (K, 2F, T) masks to a complex (2, F, T) mixture STFT -> (K, 2, F, T)

    Rows 0..F scale the left channel, rows F..2F the right; mixture phase is kept.
    """
    n_freq = mix_spec.shape[-2]
    if masks.shape[-2] != 2 * n_freq or masks.shape[-1] != mix_spec.shape[-1]:
        raise ShapeMismatchError(
            f"masks {tuple(masks.shape)} do not match spectrum {tuple(mix_spec.shape)}"
        )
    k = masks.shape[0]
    return masks.reshape(k, 2, n_freq, -1) * mix_spec.unsqueeze(0)


def stacked_magnitude(spec: torch.Tensor) -> torch.Tensor:
    """(..., 2, F, T) complex -> (..., 2F, T) magnitudes, left on top"""
    mag = spec.abs()
    return mag.reshape(*mag.shape[:-3], 2 * mag.shape[-2], mag.shape[-1])


def predict_masks(
    model: SeparatorModel,
    mix_mag,
    embeddings: Optional[Sequence[SpatialEmbedding]] = None,
) -> MaskSet:
    """runs the model on a StackedMagnitude with one embedding per stream"""
    if model.condition_mode is ConditionMode.NONE:
        emb = torch.zeros(model.n_sources, 0, dtype=DTYPE)
    else:
        if embeddings is None or len(embeddings) != model.n_sources:
            got = 0 if embeddings is None else len(embeddings)
            raise ShapeMismatchError(f"expected {model.n_sources} embeddings, got {got}")
        emb = torch.from_numpy(np.stack([e.values for e in embeddings]))
    with torch.no_grad():
        masks = model(torch.from_numpy(np.asarray(mix_mag.mag)), emb)
    return MaskSet(masks.numpy())


def apply_masks(
    masks: MaskSet, mix_left: Spectrogram, mix_right: Spectrogram
) -> List[StereoSignal]:
    """masks the mixture STFT per source and resynthesises stereo estimates"""
    if mix_left.bins.shape != mix_right.bins.shape:
        raise ShapeMismatchError("left and right spectrograms differ in shape")
    spec = torch.from_numpy(np.stack([mix_left.bins, mix_right.bins]))
    masked = mask_spectrum(torch.from_numpy(masks.masks), spec)
    waves = istft_tensor(masked, mix_left.frame_size, mix_left.hop, mix_left.n_samples)
    return [
        StereoSignal.from_array(w.numpy(), mix_left.sample_rate) for w in waves
    ]


def separate(
    model: SeparatorModel,
    mixture: StereoSignal,
    angles: Optional[Sequence[AngleSpec]] = None,
) -> List[StereoSignal]:
    """STFT, stack, mask and resynthesise the K source estimates of a mixture"""
    cfg = model.cfg
    if model.condition_mode is not ConditionMode.NONE:
        if angles is None or len(angles) != model.n_sources:
            got = 0 if angles is None else len(angles)
            raise ShapeMismatchError(f"model expects {model.n_sources} angles, got {got}")
    wave = torch.from_numpy(mixture.to_array())
    spec = stft_tensor(wave, cfg.frame_size, cfg.hop)
    with torch.no_grad():
        masks = model(stacked_magnitude(spec), model.embed(angles or []))
        masked = mask_spectrum(masks, spec)
        waves = istft_tensor(masked, cfg.frame_size, cfg.hop, len(mixture))
    return [StereoSignal.from_array(w.numpy(), mixture.sample_rate) for w in waves]
