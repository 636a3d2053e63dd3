# Experiment pipeline: toy scenes, training, separation and evaluation for one
# run label, plus the file-writing commands the CLI exposes.

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from spatialmss.audio.wav import read_stereo, write_wav
from spatialmss.encoding.positional import (
    EmbeddingConfig,
    NoiseSpec,
    encode_grid,
    perturb_angles,
)
from spatialmss.errors import DivergenceError, ShapeMismatchError
from spatialmss.experiment.config import ExperimentConfig
from spatialmss.metrics.metrics import CSV_FLOAT_FORMAT, EvalReport, evaluate_scene
from spatialmss.mixing.panning import PANORAMA_LIMIT, AngleSpec, as_angle
from spatialmss.mixing.scene import (
    DEFAULT_LAYOUT,
    Scene,
    SceneDescription,
    mix_scene,
    random_angles,
    task_scene,
)
from spatialmss.mixing.synth import task_recipes
from spatialmss.model.checkpoint import load_checkpoint, save_checkpoint
from spatialmss.model.separator import SeparatorConfig, SeparatorModel, separate
from spatialmss.training.losses import LossConfig
from spatialmss.training.trainer import TrainConfig, TrainResult, train
from utilities.ss_utils import plot_embedding_map, plot_loss_history, set_seed

# scene seeds derived from the master seed; the evaluation scene never reuses a
# training seed
_SCENES_PER_SEED = 1000
_EVAL_SCENE = _SCENES_PER_SEED - 1

GRID_COLUMNS = ["run", "si_sdr", "sdr", "delta_si_sdr", "delta_sdr"]


def scene_seed(master_seed: int, index: int) -> int:
    return master_seed * _SCENES_PER_SEED + index


def training_scenes(cfg: ExperimentConfig) -> List[Scene]:
    """toy training scenes with random, separated angles"""
    n_sources = len(task_recipes(cfg.task))
    scenes = []
    for i in range(cfg.n_train_scenes):
        seed = scene_seed(cfg.seed, i)
        angles = random_angles(n_sources, np.random.default_rng(seed))
        scenes.append(
            task_scene(cfg.task, seed, cfg.scene_seconds, angles, cfg.sample_rate)
        )
    return scenes


def evaluation_scene(
    cfg: ExperimentConfig, angles: Optional[Sequence[float]] = None
) -> Scene:
    """the held-out scene, on the default layout unless angles are given"""
    return task_scene(
        cfg.task,
        scene_seed(cfg.seed, _EVAL_SCENE),
        cfg.test_seconds,
        DEFAULT_LAYOUT if angles is None else angles,
        cfg.sample_rate,
    )


def build_model(cfg: ExperimentConfig) -> SeparatorModel:
    mode, embedding = cfg.conditioning
    labels = tuple(r.source_label for r in task_recipes(cfg.task))
    sep_cfg = SeparatorConfig(
        n_sources=len(labels),
        frame_size=cfg.frame_size,
        hop=cfg.hop,
        hidden_size=cfg.hidden_size,
        condition_mode=mode,
        embedding=embedding,
        sample_rate=cfg.sample_rate,
        labels=labels,
    )
    return SeparatorModel(sep_cfg, seed=cfg.seed)


def train_config(cfg: ExperimentConfig) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.epochs,
        batch_frames=cfg.batch_frames,
        batch_segments=cfg.batch_segments,
        learning_rate=cfg.learning_rate,
        seed=cfg.seed,
        angle_noise=cfg.train_noise_spec(),
        workers=cfg.workers,
    )


def loss_config(cfg: ExperimentConfig) -> LossConfig:
    return LossConfig(freq_weight=cfg.freq_weight, time_weight=cfg.time_weight)


def train_model(cfg: ExperimentConfig, progress: bool = False) -> TrainResult:
    """builds and trains the model of a run on freshly generated toy scenes"""
    set_seed(cfg.seed)
    model = build_model(cfg)
    scenes = training_scenes(cfg)
    return train(model, scenes, train_config(cfg), loss_config(cfg), progress)


def conditioning_angles(
    angles: Sequence[AngleSpec], noise: Optional[NoiseSpec] = None
) -> List[AngleSpec]:
    """angles fed to the model, perturbed when test-time noise is set"""
    angles = [as_angle(a) for a in angles]
    return angles if noise is None else perturb_angles(angles, noise)


def evaluate_model(
    model: SeparatorModel, cfg: ExperimentConfig, scene: Scene
) -> EvalReport:
    mixture, targets = mix_scene(scene)
    angles = conditioning_angles(scene.angles, cfg.test_noise_spec())
    estimates = separate(model, mixture, angles)
    return evaluate_scene(estimates, targets, mixture, scene.labels)


def cmd_mix(
    cfg: ExperimentConfig, out_dir: Path, angles: Optional[Sequence[float]] = None
) -> Dict[str, Path]:
    """writes the evaluation scene: mixture, one target per source, scene JSON

    Returns
    -------
    Dict[str, Path]
        "mixture", "scene" and one "target_<k>" entry per source
    """
    angles = list(DEFAULT_LAYOUT if angles is None else angles)
    recipes = task_recipes(cfg.task, scene_seed(cfg.seed, _EVAL_SCENE))
    if len(angles) != len(recipes):
        raise ShapeMismatchError(
            f"{cfg.task} has {len(recipes)} sources, got {len(angles)} angles"
        )
    description = SceneDescription.from_recipes(
        recipes, angles, cfg.test_seconds, cfg.sample_rate
    )
    mixture, targets = mix_scene(description.build())

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"mixture": out_dir / "mixture.wav", "scene": out_dir / "scene.json"}
    write_wav(paths["mixture"], mixture)
    for k, (recipe, target) in enumerate(zip(recipes, targets)):
        paths[f"target_{k}"] = out_dir / f"target_{k}_{recipe.source_label}.wav"
        write_wav(paths[f"target_{k}"], target)
    description.save(paths["scene"])
    logger.info(f"wrote {cfg.task} scene with angles {angles} to {out_dir}")
    return paths


def cmd_train(
    cfg: ExperimentConfig, out_dir: Path, progress: bool = False, plot: bool = False
) -> Path:
    """trains a run and writes its checkpoint and loss CSV; raises on divergence

    The loss CSV of a diverged run keeps the epochs completed before divergence.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = cfg.train_label
    result = train_model(cfg, progress)
    result.history.to_csv(
        out_dir / f"{name}_loss.csv", index=False, float_format=CSV_FLOAT_FORMAT
    )
    if plot and not result.history.empty:
        plot_loss_history(result.history, out_dir / f"{name}_loss.png")
    if result.diverged:
        raise DivergenceError()

    path = out_dir / f"{name}.ckpt"
    save_checkpoint(path, result.model, extra={"run": name, "config": cfg.model_dump()})
    logger.info(f"saved checkpoint {path}")
    return path


def cmd_separate(
    checkpoint: Path,
    mixture_path: Path,
    angles: Optional[Sequence[float]],
    out_dir: Path,
    noise: Optional[NoiseSpec] = None,
) -> List[Path]:
    """writes one stereo estimate per stream of a checkpoint

    Angles bind to streams in order and are ignored by an unconditioned model.
    """
    model, _ = load_checkpoint(checkpoint)
    mixture = read_stereo(mixture_path)
    if angles is not None:
        angles = conditioning_angles(angles, noise)
    estimates = separate(model, mixture, angles)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, (label, estimate) in enumerate(zip(model.cfg.labels, estimates)):
        path = out_dir / f"estimate_{k}_{label}.wav"
        write_wav(path, estimate)
        paths.append(path)
    logger.info(f"wrote {len(paths)} estimates to {out_dir}")
    return paths


def cmd_evaluate(
    estimate_paths: Sequence[Path],
    target_paths: Sequence[Path],
    mixture_path: Path,
    out_csv: Path,
    labels: Optional[Sequence[str]] = None,
) -> EvalReport:
    """scores estimate WAVs against target WAVs and writes the report CSV"""
    estimates = [read_stereo(p) for p in estimate_paths]
    targets = [read_stereo(p) for p in target_paths]
    report = evaluate_scene(estimates, targets, read_stereo(mixture_path), labels)
    Path(out_csv).parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(out_csv)
    logger.info(
        f"Avg. ΔSDR {report.average('delta_sdr'):.3f} dB, "
        f"Avg. ΔSI-SDR {report.average('delta_si_sdr'):.3f} dB"
    )
    return report


def embedding_table(cfg: EmbeddingConfig, angles: Sequence[float]) -> pd.DataFrame:
    """one row per angle: the embedding and its distance to the mirrored angle's"""
    grid = encode_grid(angles, cfg)
    mirrored = encode_grid([-a for a in angles], cfg)
    frame = pd.DataFrame(grid, columns=[f"d{i}" for i in range(grid.shape[1])])
    frame.insert(0, "angle", list(angles))
    frame.insert(1, "mirror_distance", np.linalg.norm(grid - mirrored, axis=1))
    return frame


def encode_demo(
    cfg: EmbeddingConfig,
    out_csv: Path,
    step: float = 1.0,
    plot_path: Optional[Path] = None,
) -> pd.DataFrame:
    """embeds the angle grid -45..45 to CSV, optionally with a heatmap"""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(round(2 * PANORAMA_LIMIT / step))
    angles = np.clip(-PANORAMA_LIMIT + step * np.arange(n + 1), -45.0, 45.0).tolist()
    frame = embedding_table(cfg, angles)
    Path(out_csv).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out_csv, index=False, float_format="%.9f")
    if plot_path is not None:
        plot_embedding_map(encode_grid(angles, cfg), angles, plot_path)
    logger.info(f"wrote {len(angles)} embeddings of dimension {cfg.dim} to {out_csv}")
    return frame


def run_grid(
    labels: Sequence[str],
    base: ExperimentConfig,
    out_dir: Path,
    progress: bool = False,
) -> pd.DataFrame:
    """trains and evaluates each run label on the shared evaluation scene

    Runs differing only in test-time noise share one trained model. The summary
    holds the source-averaged metrics of every run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    settings = base.model_dump(
        exclude={"task", "condition", "train_noise", "test_noise"}
    )
    models: Dict[str, SeparatorModel] = {}
    rows = []
    for label in labels:
        cfg = ExperimentConfig.from_label(label, **settings)
        if cfg.train_label not in models:
            result = train_model(cfg, progress)
            if result.diverged:
                raise DivergenceError(f"{cfg.train_label} diverged")
            models[cfg.train_label] = result.model
        report = evaluate_model(models[cfg.train_label], cfg, evaluation_scene(cfg))
        report.to_csv(out_dir / f"{cfg.label}_eval.csv")
        row = [cfg.label] + [report.average(name) for name in GRID_COLUMNS[1:]]
        rows.append(row)
        logger.info(f"{cfg.label}: Avg. ΔSDR {row[-1]:.3f} dB")

    summary = pd.DataFrame(rows, columns=GRID_COLUMNS)
    summary.to_csv(out_dir / "grid.csv", index=False, float_format=CSV_FLOAT_FORMAT)
    return summary
