"""Time-domain audio containers, STFT/ISTFT and stereo magnitude stacking.

The tensor kernels (`stft_tensor`, `istft_tensor`) do the work and are
differentiable, so the training loss can flow back through the inverse
transform. The container-level functions wrap them for numpy-held signals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from spatialmss.errors import ShapeMismatchError

DEFAULT_FRAME_SIZE = 512
DEFAULT_HOP = 128
DEFAULT_SAMPLE_RATE = 16000


def _as_finite_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    return arr


@dataclass
class MonoSignal:
    """A single-channel signal m(n)

    Parameters
    ----------
    samples : np.ndarray
        amplitude values, dimensionless
    sample_rate : int
        sampling rate in Hz
    """

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        self.samples = _as_finite_array(self.samples, "samples")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass
class StereoSignal:
    """A two-channel signal (x_L, x_R)"""

    left: np.ndarray
    right: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        self.left = _as_finite_array(self.left, "left")
        self.right = _as_finite_array(self.right, "right")
        if self.left.shape != self.right.shape:
            raise ShapeMismatchError(
                f"left and right differ in length: {len(self.left)} != {len(self.right)}"
            )
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self) -> int:
        return self.left.shape[0]

    def __add__(self, other: StereoSignal) -> StereoSignal:
        if len(self) != len(other) or self.sample_rate != other.sample_rate:
            raise ShapeMismatchError("cannot add stereo signals of different shape")
        return StereoSignal(
            self.left + other.left, self.right + other.right, self.sample_rate
        )

    def __sub__(self, other: StereoSignal) -> StereoSignal:
        if len(self) != len(other) or self.sample_rate != other.sample_rate:
            raise ShapeMismatchError("cannot subtract stereo signals of different shape")
        return StereoSignal(
            self.left - other.left, self.right - other.right, self.sample_rate
        )

    @classmethod
    def from_array(cls, data: np.ndarray, sample_rate: int) -> StereoSignal:
        """builds a stereo signal from a (2, n) array"""
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != 2:
            raise ShapeMismatchError(f"expected shape (2, n), got {data.shape}")
        return cls(data[0], data[1], sample_rate)

    def to_array(self) -> np.ndarray:
        """returns the channels stacked as a (2, n) array"""
        return np.stack([self.left, self.right])

    def channel(self, index: int) -> MonoSignal:
        return MonoSignal(self.left if index == 0 else self.right, self.sample_rate)


@dataclass
class Spectrogram:
    """Complex STFT of shape (F, T) with F = frame_size / 2 + 1"""

    bins: np.ndarray
    frame_size: int
    hop: int
    sample_rate: int
    n_samples: int = field(default=0)

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        n_freq = self.frame_size // 2 + 1
        if self.bins.ndim != 2 or self.bins.shape[0] != n_freq:
            raise ShapeMismatchError(
                f"expected {n_freq} frequency bins, got shape {self.bins.shape}"
            )
        if self.bins.shape[1] < 1:
            raise ShapeMismatchError("spectrogram needs at least one frame")
        if self.n_samples <= 0:
            self.n_samples = (self.n_frames - 1) * self.hop + self.frame_size

    @property
    def n_freq(self) -> int:
        return self.bins.shape[0]

    @property
    def n_frames(self) -> int:
        return self.bins.shape[1]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)


@dataclass
class StackedMagnitude:
    """Stacked |X| in R+^{2F x T}: left spectrogram on top, right below"""

    mag: np.ndarray
    n_freq: int = field(init=False)

    def __post_init__(self):
        self.mag = np.asarray(self.mag, dtype=np.float64)
        if self.mag.ndim != 2 or self.mag.shape[0] % 2:
            raise ShapeMismatchError(f"expected a (2F, T) matrix, got {self.mag.shape}")
        if np.any(self.mag < 0):
            raise ValueError("stacked magnitude must be nonnegative")
        self.n_freq = self.mag.shape[0] // 2

    @property
    def shape(self):
        return self.mag.shape

    @property
    def left(self) -> np.ndarray:
        return self.mag[: self.n_freq]

    @property
    def right(self) -> np.ndarray:
        return self.mag[self.n_freq :]


def hann_window(frame_size: int, dtype=torch.float64) -> torch.Tensor:
    """Hann window sampled at half-sample offsets, sin^2(pi (n + 1/2) / N)

    Nonzero at both frame edges, so every sample of a signal is recoverable.
    """
    n = torch.arange(frame_size, dtype=dtype)
    return torch.sin(math.pi * (n + 0.5) / frame_size) ** 2


def check_frame_params(frame_size: int, hop: int):
    if frame_size <= 0 or frame_size % 2:
        raise ValueError(f"frame_size must be a positive even integer, got {frame_size}")
    if hop <= 0 or hop > frame_size:
        raise ValueError("invalid hop")


def frame_count(n_samples: int, frame_size: int, hop: int) -> int:
    """number of frames covering n_samples, the final frame zero-padded"""
    if n_samples <= frame_size:
        return 1
    return math.ceil((n_samples - frame_size) / hop) + 1


def satisfies_reconstruction(frame_size: int, hop: int, tol: float = 1e-9) -> bool:
    """checks that the hop-periodised squared window is constant"""
    w2 = hann_window(frame_size).numpy() ** 2
    periodised = np.zeros(hop)
    for start in range(0, frame_size, hop):
        chunk = w2[start : start + hop]
        periodised[: chunk.shape[0]] += chunk
    return np.ptp(periodised) <= tol * periodised.mean()


def stft_tensor(x: torch.Tensor, frame_size: int, hop: int) -> torch.Tensor:
    """Hann-windowed STFT over the last axis: (..., L) -> complex (..., F, T)"""
    check_frame_params(frame_size, hop)
    n_samples = x.shape[-1]
    if n_samples == 0:
        raise ValueError("empty input")
    n_frames = frame_count(n_samples, frame_size, hop)
    pad = (n_frames - 1) * hop + frame_size - n_samples
    if pad:
        x = F.pad(x, (0, pad))
    frames = x.unfold(-1, frame_size, hop)
    window = hann_window(frame_size, dtype=x.dtype)
    return torch.fft.rfft(frames * window, dim=-1).transpose(-1, -2)


def istft_tensor(
    spec: torch.Tensor, frame_size: int, hop: int, out_len: int
) -> torch.Tensor:
    """Weighted overlap-add inverse of `stft_tensor`: complex (..., F, T) -> (..., out_len)"""
    check_frame_params(frame_size, hop)
    if not satisfies_reconstruction(frame_size, hop):
        raise ValueError("window does not satisfy reconstruction condition")
    lead = spec.shape[:-2]
    n_frames = spec.shape[-1]
    total = (n_frames - 1) * hop + frame_size
    window = hann_window(frame_size, dtype=spec.real.dtype)

    frames = torch.fft.irfft(spec.transpose(-1, -2), n=frame_size, dim=-1) * window
    # fold wants (B, C * kernel, L) with the frame contents on dim 1
    frames = frames.reshape(-1, n_frames, frame_size).transpose(1, 2)
    signal = F.fold(
        frames, output_size=(1, total), kernel_size=(1, frame_size), stride=(1, hop)
    ).reshape(*lead, total)

    envelope = F.fold(
        (window**2).reshape(1, frame_size, 1).expand(1, frame_size, n_frames),
        output_size=(1, total),
        kernel_size=(1, frame_size),
        stride=(1, hop),
    ).reshape(total)
    signal = signal / envelope.clamp_min(1e-12)

    if out_len <= total:
        return signal[..., :out_len]
    return F.pad(signal, (0, out_len - total))


def stft(
    signal: MonoSignal, frame_size: int = DEFAULT_FRAME_SIZE, hop: int = DEFAULT_HOP
) -> Spectrogram:
    """Hann-windowed complex STFT of a mono signal

    Parameters
    ----------
    signal : MonoSignal
        signal to analyse, at least frame_size samples long
    frame_size : int
        even FFT length N, default 512
    hop : int
        frame advance, 0 < hop <= frame_size, default 128

    Returns
    -------
    Spectrogram
        F = frame_size / 2 + 1 bins by T = ceil((n - N) / hop) + 1 frames
    """
    if len(signal) == 0:
        raise ValueError("empty input")
    check_frame_params(frame_size, hop)
    if len(signal) < frame_size:
        raise ValueError(
            f"signal of {len(signal)} samples is shorter than frame_size {frame_size}"
        )
    bins = stft_tensor(torch.from_numpy(signal.samples), frame_size, hop)
    return Spectrogram(
        bins.numpy(), frame_size, hop, signal.sample_rate, n_samples=len(signal)
    )


def istft(spec: Spectrogram, out_len: int | None = None) -> MonoSignal:
    """overlap-add reconstruction truncated or zero-padded to out_len"""
    out_len = spec.n_samples if out_len is None else out_len
    samples = istft_tensor(
        torch.from_numpy(spec.bins), spec.frame_size, spec.hop, out_len
    )
    return MonoSignal(samples.numpy(), spec.sample_rate)


def stack_stereo_magnitude(left: Spectrogram, right: Spectrogram) -> StackedMagnitude:
    """stacks |left| over |right| into a (2F, T) magnitude matrix"""
    if left.bins.shape != right.bins.shape:
        raise ShapeMismatchError(
            f"left {left.bins.shape} and right {right.bins.shape} spectrograms differ"
        )
    return StackedMagnitude(np.concatenate([left.magnitude(), right.magnitude()]))


def stereo_stft(
    signal: StereoSignal, frame_size: int = DEFAULT_FRAME_SIZE, hop: int = DEFAULT_HOP
) -> tuple[Spectrogram, Spectrogram]:
    return stft(signal.channel(0), frame_size, hop), stft(signal.channel(1), frame_size, hop)
