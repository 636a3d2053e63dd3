from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch
import torch.nn as nn
from loguru import logger
from torch.utils.data import DataLoader
from tqdm import tqdm

from spatialmss.audio.signal import istft_tensor, stft_tensor
from spatialmss.dataset import SceneSegmentDataset
from spatialmss.encoding.positional import NoiseSpec, perturb_angles
from spatialmss.errors import DivergenceError
from spatialmss.mixing.panning import AngleSpec
from spatialmss.mixing.scene import Scene
from spatialmss.model.separator import SeparatorModel, mask_spectrum, stacked_magnitude
from spatialmss.training.losses import LossConfig, LossTerms, multi_domain_loss

HISTORY_COLUMNS = ["epoch", "freq_loss", "wsdr_loss", "total"]


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings of one training run

    `angle_noise` set means the noisy-angle training variant: every scene's
    angles are independently perturbed at the start of every epoch.
    """

    epochs: int = 20
    batch_frames: int = 32
    batch_segments: int = 8
    learning_rate: float = 1e-3
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    angle_noise: Optional[NoiseSpec] = None
    workers: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_frames < 1 or self.batch_segments < 1:
            raise ValueError("epochs, batch_frames and batch_segments must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass
class Batch:
    """B segments: mixtures (B, 2, L), targets (B, K, 2, L), angles per segment"""

    mixtures: torch.Tensor
    targets: torch.Tensor
    angles: List[List[AngleSpec]]

    def __len__(self):
        return self.mixtures.shape[0]


def segment_loss(
    model: SeparatorModel,
    mixture: torch.Tensor,
    targets: torch.Tensor,
    angles: Sequence[AngleSpec],
    loss_cfg: LossConfig,
) -> LossTerms:
    """full pipeline on one segment: STFT, conditioning, masks, ISTFT, losses"""
    frame_size, hop = model.cfg.frame_size, model.cfg.hop
    spec = stft_tensor(mixture, frame_size, hop)
    mix_mag = stacked_magnitude(spec)
    target_mag = stacked_magnitude(stft_tensor(targets, frame_size, hop))

    masks = model(mix_mag, model.embed(angles))
    estimates = istft_tensor(
        mask_spectrum(masks, spec), frame_size, hop, mixture.shape[-1]
    )
    return multi_domain_loss(
        loss_cfg, masks * mix_mag, target_mag, estimates, targets, mixture
    )


def _segment_gradient(model, batch: Batch, i: int, loss_cfg: LossConfig):
    terms = segment_loss(
        model, batch.mixtures[i], batch.targets[i], batch.angles[i], loss_cfg
    )
    if not torch.isfinite(terms.total):
        raise DivergenceError()
    params = list(model.parameters())
    grads = torch.autograd.grad(terms.total, params)
    flat = torch.cat([g.reshape(-1) for g in grads])
    return flat, torch.stack([t.detach() for t in terms])


def backward(
    model: SeparatorModel, batch: Batch, loss_cfg: LossConfig, workers: int = 1
) -> Tuple[torch.Tensor, LossTerms]:
    """gradient of the mean segment loss with respect to every parameter

    Segments are differentiated independently, on a thread pool when
    workers > 1, and reduced in segment order so the result does not depend
    on the worker count.

    Returns
    -------
    Tuple[torch.tensor, LossTerms]
        flat gradient vector and the batch-mean loss terms
    """

    def task(i):
        return _segment_gradient(model, batch, i, loss_cfg)

    if workers > 1 and len(batch) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, range(len(batch))))
    else:
        results = [task(i) for i in range(len(batch))]

    grad = torch.zeros_like(results[0][0])
    terms = torch.zeros_like(results[0][1])
    for g, t in results:
        grad = grad + g
        terms = terms + t
    grad = grad / len(batch)
    terms = terms / len(batch)
    if not torch.isfinite(grad).all():
        raise DivergenceError()
    return grad, LossTerms(*terms)


def adam_step(
    params: Sequence[nn.Parameter],
    grads: torch.Tensor,
    optimizer: Optional[torch.optim.Adam] = None,
    lr: float = 1e-3,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> torch.optim.Adam:
    """one bias-corrected Adam update from a flat gradient

    The optimizer carries the moment estimates; a new one is created when none
    is given. Returns the optimizer so the caller can keep the state.
    """
    params = list(params)
    if optimizer is None:
        optimizer = torch.optim.Adam(params, lr=lr, betas=betas, eps=eps)
    offset = 0
    for p in params:
        n = p.numel()
        p.grad = grads[offset : offset + n].view_as(p).clone()
        offset += n
    optimizer.step()
    optimizer.zero_grad(set_to_none=True)
    return optimizer


@dataclass
class TrainResult:
    model: SeparatorModel
    history: pd.DataFrame
    diverged: bool = False


@dataclass
class SeparatorTrainer:
    """Trains a SeparatorModel on toy scenes with the multi-domain loss"""

    model: SeparatorModel
    scenes: List[Scene]
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    loss_cfg: LossConfig = field(default_factory=LossConfig)
    progress: bool = False
    dataset: SceneSegmentDataset = field(init=False)
    dataloader: DataLoader = field(init=False)
    optimizer: torch.optim.Adam = field(init=False)
    history: List[dict] = field(init=False, default_factory=list)

    def __post_init__(self):
        cfg = self.model.cfg
        self.dataset = SceneSegmentDataset(
            self.scenes, cfg.frame_size, cfg.hop, self.train_cfg.batch_frames
        )
        if len(self.dataset) == 0:
            raise ValueError("scenes are too short for a single training segment")
        self.dataloader = DataLoader(
            self.dataset,
            batch_size=self.train_cfg.batch_segments,
            shuffle=True,
            generator=torch.Generator().manual_seed(self.train_cfg.seed),
        )
        self.optimizer = torch.optim.Adam(
            self.model.parameters(),
            lr=self.train_cfg.learning_rate,
            betas=self.train_cfg.betas,
            eps=self.train_cfg.eps,
        )

    def epoch_angles(self, epoch: int) -> List[List[AngleSpec]]:
        """per-scene conditioning angles, perturbed per epoch when noise is set"""
        noise = self.train_cfg.angle_noise
        if noise is None:
            return [scene.angles for scene in self.scenes]
        return [
            perturb_angles(
                scene.angles, noise, np.random.default_rng([noise.seed, epoch, i])
            )
            for i, scene in enumerate(self.scenes)
        ]

    def train_epoch(self, epoch: int) -> dict:
        angles = self.epoch_angles(epoch)
        totals = torch.zeros(3, dtype=torch.float64)
        n_batches = 0
        for mixtures, targets, scene_idx in self.dataloader:
            batch = Batch(mixtures, targets, [angles[i] for i in scene_idx.tolist()])
            grad, terms = backward(
                self.model, batch, self.loss_cfg, self.train_cfg.workers
            )
            adam_step(self.model.parameters(), grad, self.optimizer)
            totals += torch.stack(list(terms))
            n_batches += 1
        freq, wsdr, total = (totals / n_batches).tolist()
        return {"epoch": epoch + 1, "freq_loss": freq, "wsdr_loss": wsdr, "total": total}

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history, columns=HISTORY_COLUMNS)

    def train(self) -> TrainResult:
        epochs = self.train_cfg.epochs
        logger.info(
            f"training {self.model.condition_mode.value} separator: {epochs} epochs, "
            f"{len(self.dataset)} segments from {len(self.scenes)} scenes"
        )
        if epochs > 0:
            self.model.fit_normalization(self.dataset.magnitude_frames())

        self.model.train()
        try:
            for epoch in tqdm(range(epochs), desc="epochs", disable=not self.progress):
                row = self.train_epoch(epoch)
                self.history.append(row)
                logger.info(
                    f"Epoch {row['epoch']} - Freq Loss: {row['freq_loss']:.6f}, "
                    f"wSDR Loss: {row['wsdr_loss']:.6f}, Total: {row['total']:.6f}"
                )
        except DivergenceError:
            logger.error(f"training diverged after {len(self.history)} epochs")
            return TrainResult(self.model, self.history_frame(), diverged=True)
        finally:
            self.model.eval()

        logger.info("Training complete!")
        return TrainResult(self.model, self.history_frame())


def train(
    model: SeparatorModel,
    scenes: Sequence[Scene],
    train_cfg: TrainConfig = TrainConfig(),
    loss_cfg: LossConfig = LossConfig(),
    progress: bool = False,
) -> TrainResult:
    """trains a model in place and returns it with the per-epoch loss history"""
    trainer = SeparatorTrainer(model, list(scenes), train_cfg, loss_cfg, progress)
    return trainer.train()
