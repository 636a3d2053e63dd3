"""Experiment configuration and the run-label naming scheme.

A run label names the task, the conditioning variant and whether angles are
noisy at train and test time, e.g. "4S2G-D1-CAT-α_Tr-ᾱ_Te". Labels parse back
into the exact configuration they were formatted from.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, Literal, NamedTuple, Optional, Union, get_args

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from spatialmss.audio.signal import DEFAULT_FRAME_SIZE, DEFAULT_HOP, DEFAULT_SAMPLE_RATE
from spatialmss.conditioning.conditioning import ConditionMode
from spatialmss.encoding.positional import EmbeddingConfig, NoiseSpec
from spatialmss.errors import ConfigError

OUTPUT_DIR_ENV = "SPATIALMSS_OUTPUT_DIR"
BASELINE_NOISE_MESSAGE = "D0 takes no angles, so it has no noisy training"

Task = Literal["4S", "4S2G"]
Condition = Literal[
    "D0", "D1-CAT", "DF-CAT", "DF-ADD", "DF-ADAIN", "D16-CAT", "D32-CAT", "D64-CAT"
]
CONDITIONS = get_args(Condition)
TASKS = get_args(Task)

CLEAN_TRAIN, NOISY_TRAIN = "α_Tr", "ᾱ_Tr"
CLEAN_TEST, NOISY_TEST = "α_Te", "ᾱ_Te"

# every accepted spelling of a train/test tag -> (stage, noisy)
_TAGS = {
    "α_Tr": ("train", False),
    "a_Tr": ("train", False),
    "ᾱ_Tr": ("train", True),
    "\u03b1\u0304_Tr": ("train", True),  # alpha followed by a combining macron
    "abar_Tr": ("train", True),
    "α_Te": ("test", False),
    "a_Te": ("test", False),
    "ᾱ_Te": ("test", True),
    "\u03b1\u0304_Te": ("test", True),
    "abar_Te": ("test", True),
}


class ConditionSpec(NamedTuple):
    mode: ConditionMode
    embedding: EmbeddingConfig


def condition_spec(condition: str, frame_size: int, unit: str = "radian") -> ConditionSpec:
    """conditioning mode and embedding of a condition name

    DF conditions use D = 2F of the given frame size; D1 is the raw angle.
    """
    if condition not in CONDITIONS:
        raise ConfigError(f"unknown condition {condition!r}")
    if condition == "D0":
        return ConditionSpec(ConditionMode.NONE, EmbeddingConfig.raw())
    dim_name, mode_name = condition.split("-")
    mode = ConditionMode(mode_name)
    if dim_name == "D1":
        return ConditionSpec(mode, EmbeddingConfig.raw())
    if dim_name == "DF":
        dim = 2 * (frame_size // 2 + 1)
    else:
        dim = int(dim_name[1:])
    return ConditionSpec(mode, EmbeddingConfig(dim=dim, mode="sinusoidal", unit=unit))


class ExperimentConfig(BaseModel):
    """One run of the experiment grid plus the toy-scale training budget"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    task: Task = "4S"
    condition: Condition = "D1-CAT"
    train_noise: bool = False
    test_noise: bool = False
    delta: float = Field(default=8.0, ge=0.0, le=45.0)
    seed: int = Field(default=0, ge=0)

    # signal and model
    sample_rate: int = Field(default=DEFAULT_SAMPLE_RATE, gt=0)
    frame_size: int = Field(default=DEFAULT_FRAME_SIZE, ge=4)
    hop: int = Field(default=DEFAULT_HOP, ge=1)
    hidden_size: int = Field(default=64, ge=1)
    embedding_unit: Literal["radian", "degree"] = "radian"

    # training budget
    epochs: int = Field(default=20, ge=0)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    batch_frames: int = Field(default=32, ge=1)
    batch_segments: int = Field(default=8, ge=1)
    freq_weight: float = Field(default=1.0, ge=0.0)
    time_weight: float = Field(default=1.0, ge=0.0)
    n_train_scenes: int = Field(default=8, ge=1)
    scene_seconds: float = Field(default=4.0, gt=0.0)
    test_seconds: float = Field(default=4.0, gt=0.0)
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_fields(self):
        if self.hop > self.frame_size:
            raise ValueError("invalid hop")
        if self.condition == "D0" and self.train_noise:
            raise ValueError(BASELINE_NOISE_MESSAGE)
        return self

    @property
    def train_label(self) -> str:
        """label of the trained model, independent of test-time noise"""
        label = f"{self.task}-{self.condition}"
        if self.condition != "D0":
            label += "-" + (NOISY_TRAIN if self.train_noise else CLEAN_TRAIN)
        return label

    @property
    def label(self) -> str:
        return self.train_label + ("-" + NOISY_TEST if self.test_noise else "")

    @property
    def conditioning(self) -> ConditionSpec:
        return condition_spec(self.condition, self.frame_size, self.embedding_unit)

    def train_noise_spec(self) -> Optional[NoiseSpec]:
        return NoiseSpec(self.delta, self.seed) if self.train_noise else None

    def test_noise_spec(self) -> Optional[NoiseSpec]:
        # a different stream from the training noise of the same master seed
        return NoiseSpec(self.delta, self.seed + 1) if self.test_noise else None

    @classmethod
    def from_label(cls, label: str, **overrides) -> ExperimentConfig:
        """parses a run label; keyword overrides fill the non-label fields"""
        return build_config({**overrides, **parse_label(label)})


def parse_label(label: str) -> Dict[str, Any]:
    """task, condition, train_noise and test_noise named by a run label

    Raises
    ------
    ConfigError
        unknown task, condition or tag, or a repeated tag
    """
    parts = label.strip().split("-")
    if len(parts) < 2 or parts[0] not in TASKS:
        raise ConfigError(f"cannot parse run label {label!r}")
    if parts[1] == "D0":
        condition, rest = "D0", parts[2:]
    else:
        condition, rest = "-".join(parts[1:3]), parts[3:]
    if condition not in CONDITIONS:
        raise ConfigError(f"unknown condition in run label {label!r}")

    noise = {}
    for tag in rest:
        if tag not in _TAGS:
            raise ConfigError(f"unknown tag {tag!r} in run label {label!r}")
        stage, noisy = _TAGS[tag]
        if stage in noise:
            raise ConfigError(f"repeated {stage} tag in run label {label!r}")
        noise[stage] = noisy
    if condition == "D0" and noise.get("train"):
        raise ConfigError(f"{BASELINE_NOISE_MESSAGE}: {label!r}")

    return {
        "task": parts[0],
        "condition": condition,
        "train_noise": noise.get("train", False),
        "test_noise": noise.get("test", False),
    }


def build_config(
    base: Optional[Dict[str, Any]] = None, **flags
) -> ExperimentConfig:
    """validates `base` updated with every flag that is not None"""
    values = dict(base or {})
    values.update({k: v for k, v in flags.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def load_config(
    path: Union[str, os.PathLike, None] = None,
    label: Optional[str] = None,
    **flags,
) -> ExperimentConfig:
    """JSON file values, then the run label, then flags; flags win"""
    base: Dict[str, Any] = {}
    if path is not None:
        try:
            base = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(base, dict):
            raise ConfigError(f"{path}: expected a JSON object")
    if label is not None:
        base.update(parse_label(label))
    return build_config(base, **flags)


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "runs"))
