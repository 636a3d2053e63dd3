"""Combining a spatial embedding with a stacked-magnitude frame.

The tensor kernels broadcast over leading dimensions and are what the
separator uses; the frame-level functions wrap them for single vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import torch

from spatialmss.encoding.positional import SpatialEmbedding
from spatialmss.errors import ShapeMismatchError

ADAIN_EPS = 1e-8


class ConditionMode(str, Enum):
    NONE = "NONE"
    CAT = "CAT"
    ADD = "ADD"
    ADAIN = "ADAIN"


@dataclass(frozen=True)
class ConditionedFrame:
    values: np.ndarray
    frame_index: int = 0


def required_dim(mode: ConditionMode, two_f: int, dim: int) -> int:
    """width of the conditioned input, validating the D / 2F contract"""
    mode = ConditionMode(mode)
    if mode is ConditionMode.NONE:
        return two_f
    if mode is ConditionMode.CAT:
        return two_f + dim
    if dim != two_f:
        raise ShapeMismatchError(f"{mode.value} requires D = 2F")
    return two_f


def concat_condition(x: torch.Tensor, a: torch.Tensor) -> torch.Tensor:
    """[x, a] along the last axis, a broadcast to x's leading shape"""
    a = a.expand(*x.shape[:-1], a.shape[-1])
    return torch.cat([x, a], dim=-1)


def add_condition(x: torch.Tensor, a: torch.Tensor) -> torch.Tensor:
    if x.shape[-1] != a.shape[-1]:
        raise ShapeMismatchError("ADD requires D = 2F")
    return x + a


def _moments(v: torch.Tensor):
    mean = v.mean(dim=-1, keepdim=True)
    # population convention
    std = v.var(dim=-1, unbiased=False, keepdim=True).sqrt()
    return mean, std


def adain_condition(
    x: torch.Tensor, a: torch.Tensor, eps: float = ADAIN_EPS
) -> torch.Tensor:
    """sigma(a) (x - mu(x)) / max(sigma(x), eps) + mu(a), per last-axis vector"""
    if x.shape[-1] != a.shape[-1]:
        raise ShapeMismatchError("ADAIN requires D = 2F")
    x_mean, x_std = _moments(x)
    a_mean, a_std = _moments(a)
    return a_std * (x - x_mean) / x_std.clamp_min(eps) + a_mean


def _frame(values) -> torch.Tensor:
    frame = torch.as_tensor(np.asarray(values, dtype=np.float64))
    if frame.ndim != 1 or not torch.isfinite(frame).all():
        raise ValueError("frame must be a finite vector")
    return frame


def condition_cat(frame, emb: SpatialEmbedding, frame_index: int = 0) -> ConditionedFrame:
    out = concat_condition(_frame(frame), torch.from_numpy(emb.values))
    return ConditionedFrame(out.numpy(), frame_index)


def condition_add(frame, emb: SpatialEmbedding, frame_index: int = 0) -> ConditionedFrame:
    out = add_condition(_frame(frame), torch.from_numpy(emb.values))
    return ConditionedFrame(out.numpy(), frame_index)


def condition_adain(
    frame, emb: SpatialEmbedding, frame_index: int = 0
) -> ConditionedFrame:
    out = adain_condition(_frame(frame), torch.from_numpy(emb.values))
    return ConditionedFrame(out.numpy(), frame_index)


def condition_tensor(
    mode: ConditionMode, x: torch.Tensor, a: torch.Tensor
) -> torch.Tensor:
    """dispatches to the kernel of a mode; NONE returns x untouched"""
    mode = ConditionMode(mode)
    if mode is ConditionMode.NONE:
        return x
    if mode is ConditionMode.CAT:
        return concat_condition(x, a)
    if mode is ConditionMode.ADD:
        return add_condition(x, a)
    return adain_condition(x, a)
