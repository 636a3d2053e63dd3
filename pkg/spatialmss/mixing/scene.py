"""Stereo scenes built from panned monophonic stems"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from spatialmss.audio.signal import DEFAULT_SAMPLE_RATE, MonoSignal, StereoSignal
from spatialmss.audio.wav import read_mono
from spatialmss.errors import ShapeMismatchError
from spatialmss.mixing.panning import PANORAMA_LIMIT, AngleSpec, as_angle, pan
from spatialmss.mixing.synth import ToyStemSpec, synth_stem, task_recipes

MIN_SEPARATION = 10.0

# Gtr/Str(or Gtr2)/Pia/Bas: guitar left, second slot slightly left, piano right,
# bass centre
DEFAULT_LAYOUT: Tuple[float, ...] = (-30.0, -10.0, 30.0, 0.0)


@dataclass
class SceneStem:
    signal: MonoSignal
    angle: AngleSpec
    label: str

    def __post_init__(self):
        self.angle = as_angle(self.angle)


@dataclass
class Scene:
    """K >= 2 monophonic stems with their panning angles"""

    stems: List[SceneStem]
    K: int = field(init=False)

    def __post_init__(self):
        self.K = len(self.stems)
        if self.K < 2:
            raise ValueError("K ≥ 2 required")
        lengths = {len(s.signal) for s in self.stems}
        rates = {s.signal.sample_rate for s in self.stems}
        if len(lengths) != 1 or len(rates) != 1:
            raise ShapeMismatchError("all stems must share sample rate and length")

    @property
    def angles(self) -> List[AngleSpec]:
        return [s.angle for s in self.stems]

    @property
    def labels(self) -> List[str]:
        return [s.label for s in self.stems]

    @property
    def sample_rate(self) -> int:
        return self.stems[0].signal.sample_rate

    @property
    def n_samples(self) -> int:
        return len(self.stems[0].signal)

    def with_angles(self, angles: Sequence[Union[AngleSpec, float]]) -> Scene:
        if len(angles) != self.K:
            raise ShapeMismatchError(f"expected {self.K} angles, got {len(angles)}")
        return Scene(
            [SceneStem(s.signal, a, s.label) for s, a in zip(self.stems, angles)]
        )


def mix_scene(scene: Scene) -> Tuple[StereoSignal, List[StereoSignal]]:
    """pans every stem and sums the stereo images

    Returns
    -------
    Tuple[StereoSignal, List[StereoSignal]]
        the mixture and the K target images in stem order
    """
    targets = [pan(stem.signal, stem.angle) for stem in scene.stems]
    left = np.sum([t.left for t in targets], axis=0)
    right = np.sum([t.right for t in targets], axis=0)
    return StereoSignal(left, right, scene.sample_rate), targets


def random_angles(
    k: int, rng: np.random.Generator, min_separation: float = MIN_SEPARATION
) -> List[AngleSpec]:
    """uniform angles on the panorama with a minimum pairwise separation"""
    if (k - 1) * min_separation > 2 * PANORAMA_LIMIT:
        raise ValueError(f"cannot place {k} sources {min_separation} degrees apart")
    while True:
        draws = rng.uniform(-PANORAMA_LIMIT, PANORAMA_LIMIT, size=k)
        gaps = np.diff(np.sort(draws))
        if k < 2 or gaps.min() >= min_separation:
            return [AngleSpec(float(d)) for d in draws]


def synth_scene(
    recipes: Sequence[ToyStemSpec],
    angles: Sequence[Union[AngleSpec, float]],
    duration: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> Scene:
    return Scene(
        [
            SceneStem(synth_stem(r, duration, sample_rate), a, r.source_label)
            for r, a in zip(recipes, angles, strict=True)
        ]
    )


def task_scene(
    task: str,
    seed: int,
    duration: float,
    angles: Optional[Sequence[float]] = None,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> Scene:
    """toy scene of a task; random separated angles unless given"""
    recipes = task_recipes(task, seed)
    if angles is None:
        angles = random_angles(len(recipes), np.random.default_rng(seed))
    return synth_scene(recipes, angles, duration, sample_rate)


class SceneStemEntry(BaseModel):
    label: str
    angle_degrees: float = Field(ge=-PANORAMA_LIMIT, le=PANORAMA_LIMIT)
    stem_spec: Optional[ToyStemSpec] = None
    wav_path: Optional[str] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.stem_spec is None) == (self.wav_path is None):
            raise ValueError("each stem needs exactly one of stem_spec or wav_path")
        return self


class SceneDescription(BaseModel):
    """JSON scene file: per-stem label, angle and either a recipe or a mono WAV"""

    sample_rate: int = Field(default=DEFAULT_SAMPLE_RATE, gt=0)
    duration: float = Field(gt=0.0)
    stems: List[SceneStemEntry] = Field(min_length=2)

    @classmethod
    def load(cls, path: Union[str, os.PathLike]) -> SceneDescription:
        return cls.model_validate_json(Path(path).read_text())

    def save(self, path: Union[str, os.PathLike]):
        Path(path).write_text(json.dumps(self.model_dump(), indent=2) + "\n")

    def build(self, base_dir: Union[str, os.PathLike, None] = None) -> Scene:
        """renders recipes or loads WAV stems into a Scene"""
        base = Path(base_dir) if base_dir is not None else Path.cwd()
        stems = []
        for entry in self.stems:
            if entry.stem_spec is not None:
                signal = synth_stem(entry.stem_spec, self.duration, self.sample_rate)
            else:
                signal = read_mono(base / entry.wav_path)
            stems.append(SceneStem(signal, AngleSpec(entry.angle_degrees), entry.label))
        return Scene(stems)

    @classmethod
    def from_recipes(
        cls,
        recipes: Sequence[ToyStemSpec],
        angles: Sequence[float],
        duration: float,
        sample_rate: int = DEFAULT_SAMPLE_RATE,
    ) -> SceneDescription:
        return cls(
            sample_rate=sample_rate,
            duration=duration,
            stems=[
                SceneStemEntry(
                    label=r.source_label, angle_degrees=float(a), stem_spec=r
                )
                for r, a in zip(recipes, angles, strict=True)
            ],
        )
