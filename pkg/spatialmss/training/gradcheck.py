from typing import NamedTuple

import numpy as np
import torch
from loguru import logger

from spatialmss.model.separator import SeparatorModel
from spatialmss.training.losses import LossConfig
from spatialmss.training.trainer import Batch, backward, segment_loss

REL_ERROR_FLOOR = 1e-6


class GradCheckResult(NamedTuple):
    max_rel_error: float
    indices: np.ndarray
    analytic: np.ndarray
    numeric: np.ndarray


def _batch_loss(model: SeparatorModel, batch: Batch, loss_cfg: LossConfig) -> float:
    with torch.no_grad():
        losses = [
            segment_loss(
                model, batch.mixtures[i], batch.targets[i], batch.angles[i], loss_cfg
            ).total
            for i in range(len(batch))
        ]
    return float(torch.stack(losses).mean())


def gradient_check(
    model: SeparatorModel,
    batch: Batch,
    loss_cfg: LossConfig = LossConfig(),
    n_params: int = 50,
    h: float = 1e-5,
    seed: int = 0,
) -> GradCheckResult:
    """compares backward() against central finite differences

    Parameters
    ----------
    model : SeparatorModel
        model whose parameters are probed; restored on exit
    batch : Batch
        segments the loss is evaluated on
    n_params : int
        number of randomly chosen parameter entries to probe
    h : float
        finite-difference step

    Returns
    -------
    GradCheckResult
        per-entry relative error is |a - n| / max(|a|, |n|, 1e-6)
    """
    analytic, _ = backward(model, batch, loss_cfg)
    base = model.flat_parameters()
    rng = np.random.default_rng(seed)
    indices = rng.choice(base.numel(), size=min(n_params, base.numel()), replace=False)

    numeric = np.empty(len(indices))
    try:
        for j, idx in enumerate(indices):
            shifted = base.clone()
            shifted[idx] += h
            model.load_flat_parameters(shifted)
            upper = _batch_loss(model, batch, loss_cfg)
            shifted[idx] -= 2 * h
            model.load_flat_parameters(shifted)
            lower = _batch_loss(model, batch, loss_cfg)
            numeric[j] = (upper - lower) / (2 * h)
    finally:
        model.load_flat_parameters(base)

    picked = analytic[indices].numpy()
    scale = np.maximum(np.maximum(np.abs(picked), np.abs(numeric)), REL_ERROR_FLOOR)
    rel = np.abs(picked - numeric) / scale
    logger.debug(f"gradient check over {len(indices)} entries: max rel error {rel.max():.3e}")
    return GradCheckResult(float(rel.max()), indices, picked, numeric)
