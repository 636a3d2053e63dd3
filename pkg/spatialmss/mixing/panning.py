"""Constant power panning and its single-source inverse"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from spatialmss.audio.signal import MonoSignal, StereoSignal

PANORAMA_LIMIT = 45.0


@dataclass(frozen=True)
class AngleSpec:
    """Panning angle in degrees on the panorama [-45, +45]"""

    degrees: float

    def __post_init__(self):
        if not math.isfinite(self.degrees) or abs(self.degrees) > PANORAMA_LIMIT:
            raise ValueError("angle out of panorama")
        object.__setattr__(self, "degrees", float(self.degrees))

    def __float__(self) -> float:
        return self.degrees

    @property
    def radians(self) -> float:
        return math.radians(self.degrees)


def as_angle(angle) -> AngleSpec:
    return angle if isinstance(angle, AngleSpec) else AngleSpec(float(angle))


def cpp_gains(angle: AngleSpec) -> Tuple[float, float]:
    """left and right gains of the constant power panning law

    g_L = (sqrt(2)/2)(cos a + sin a), g_R = (sqrt(2)/2)(cos a - sin a)

    Parameters
    ----------
    angle : AngleSpec
        panning angle, or anything convertible to one

    Returns
    -------
    Tuple[float, float]
        (g_left, g_right), with g_left^2 + g_right^2 = 1
    """
    alpha = as_angle(angle).radians
    scale = math.sqrt(2.0) / 2.0
    return (
        scale * (math.cos(alpha) + math.sin(alpha)),
        scale * (math.cos(alpha) - math.sin(alpha)),
    )


def pan(stem: MonoSignal, angle: AngleSpec) -> StereoSignal:
    g_left, g_right = cpp_gains(angle)
    return StereoSignal(g_left * stem.samples, g_right * stem.samples, stem.sample_rate)


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x**2))) if x.size else 0.0


def estimate_angle(stereo: StereoSignal) -> AngleSpec:
    """recovers the panning angle of a single CPP-panned source

    Uses the full-signal RMS ratio r = rms(L) / rms(R); alpha = atan(r) - 45 deg.
    """
    left, right = _rms(stereo.left), _rms(stereo.right)
    if left == 0.0 and right == 0.0:
        raise ValueError("cannot estimate angle of silence")
    # atan2 maps the r = inf case (silent right channel) to 90 deg
    degrees = math.degrees(math.atan2(left, right)) - PANORAMA_LIMIT
    return AngleSpec(min(max(degrees, -PANORAMA_LIMIT), PANORAMA_LIMIT))
