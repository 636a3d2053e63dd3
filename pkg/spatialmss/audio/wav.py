"""RIFF PCM WAV reading and writing for mono and stereo signals"""

from __future__ import annotations

import os
from typing import Literal, Union

import numpy as np
from loguru import logger
from scipy.io import wavfile

from spatialmss.audio.signal import MonoSignal, StereoSignal
from spatialmss.errors import SpatialSeparationError

Signal = Union[MonoSignal, StereoSignal]
Subtype = Literal["float32", "int16"]

INT16_SCALE = 32768.0


def _to_float(data: np.ndarray) -> np.ndarray:
    if data.dtype == np.int16:
        return data.astype(np.float64) / INT16_SCALE
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64)
    raise SpatialSeparationError(f"unsupported WAV sample format {data.dtype}")


def read_wav(path: Union[str, os.PathLike]) -> Signal:
    """reads a 16-bit integer or 32-bit float WAV file

    Returns
    -------
    MonoSignal or StereoSignal
        depending on the channel count of the file
    """
    sample_rate, data = wavfile.read(path)
    samples = _to_float(data)
    if samples.ndim == 1:
        return MonoSignal(samples, int(sample_rate))
    if samples.shape[1] == 2:
        return StereoSignal(samples[:, 0], samples[:, 1], int(sample_rate))
    raise SpatialSeparationError(
        f"{path}: expected 1 or 2 channels, found {samples.shape[1]}"
    )


def read_mono(path: Union[str, os.PathLike]) -> MonoSignal:
    signal = read_wav(path)
    if not isinstance(signal, MonoSignal):
        raise SpatialSeparationError(f"{path} is not a mono file")
    return signal


def read_stereo(path: Union[str, os.PathLike]) -> StereoSignal:
    signal = read_wav(path)
    if not isinstance(signal, StereoSignal):
        raise SpatialSeparationError(f"{path} is not a stereo file")
    return signal


def write_wav(
    path: Union[str, os.PathLike], signal: Signal, subtype: Subtype = "float32"
):
    """writes a signal as interleaved PCM, float32 or int16"""
    if isinstance(signal, StereoSignal):
        data = np.stack([signal.left, signal.right], axis=1)
    else:
        data = signal.samples

    if subtype == "float32":
        data = data.astype(np.float32)
    elif subtype == "int16":
        peak = np.max(np.abs(data)) if data.size else 0.0
        if peak > 1.0:
            logger.warning(f"{path}: clipping peak {peak:.3f} to int16 range")
        data = np.clip(np.round(data * INT16_SCALE), -INT16_SCALE, INT16_SCALE - 1)
        data = data.astype(np.int16)
    else:
        raise ValueError(f"unknown WAV subtype {subtype}")

    wavfile.write(path, signal.sample_rate, data)
