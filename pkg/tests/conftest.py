import numpy as np
import pytest
import torch
from loguru import logger

from spatialmss.conditioning.conditioning import ConditionMode
from spatialmss.dataset import SceneSegmentDataset
from spatialmss.encoding.positional import EmbeddingConfig
from spatialmss.mixing.scene import synth_scene
from spatialmss.mixing.synth import Note, ToyStemSpec
from spatialmss.model.separator import SeparatorConfig, SeparatorModel
from spatialmss.training.trainer import Batch

# tiny STFT geometry shared by the model and training tests: F = 9, 2F = 18
TINY_FRAME = 16
TINY_HOP = 4
TINY_TWO_F = 18


def sustained_recipe(label: str, fundamental: float, seed: int) -> ToyStemSpec:
    """a stem that sounds for the whole scene, so no segment is silent"""
    return ToyStemSpec(
        source_label=label,
        fundamental=fundamental,
        harmonic_weights=(1.0, 0.5, 0.25),
        notes=(Note(onset=0.0, duration=10.0),),
        seed=seed,
    )


def tiny_model(
    mode: ConditionMode = ConditionMode.CAT,
    embedding: EmbeddingConfig = None,
    seed: int = 0,
    n_sources: int = 2,
) -> SeparatorModel:
    if embedding is None:
        if mode in (ConditionMode.ADD, ConditionMode.ADAIN):
            embedding = EmbeddingConfig(dim=TINY_TWO_F)
        else:
            embedding = EmbeddingConfig.raw()
    cfg = SeparatorConfig(
        n_sources=n_sources,
        frame_size=TINY_FRAME,
        hop=TINY_HOP,
        hidden_size=8,
        condition_mode=mode,
        embedding=embedding,
    )
    return SeparatorModel(cfg, seed)


def tiny_batch(scene, segment_frames: int = 4, n_segments: int = 2) -> Batch:
    dataset = SceneSegmentDataset([scene], TINY_FRAME, TINY_HOP, segment_frames)
    items = [dataset[i] for i in range(n_segments)]
    return Batch(
        torch.stack([mixture for mixture, _, _ in items]),
        torch.stack([targets for _, targets, _ in items]),
        [scene.angles] * n_segments,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_source_scene():
    """two sustained harmonic stems at -30 and +30 degrees, 0.05 s at 16 kHz"""
    recipes = [sustained_recipe("Low", 440.0, 1), sustained_recipe("High", 1250.0, 2)]
    return synth_scene(recipes, [-30.0, 30.0], duration=0.05)


@pytest.fixture
def log_messages():
    messages = []
    handler_id = logger.add(lambda m: messages.append(m.record["message"]), level="DEBUG")
    yield messages
    logger.remove(handler_id)
