"""Checkpoint files: one JSON header line, then raw little-endian float64 tensors"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import torch

from spatialmss.errors import CheckpointError
from spatialmss.model.separator import DTYPE, SeparatorConfig, SeparatorModel

FORMAT_TAG = "spatialmss-checkpoint/1"


def save_checkpoint(
    path: Union[str, os.PathLike],
    model: SeparatorModel,
    extra: Optional[Dict[str, Any]] = None,
):
    """writes the header (config, seeds, tensor layout) and every state tensor"""
    state = model.state_dict()
    header = {
        "format": FORMAT_TAG,
        "config": model.cfg.to_dict(),
        "seed": model.seed,
        "tensors": [[name, list(t.shape)] for name, t in state.items()],
        "extra": extra or {},
    }
    payload = torch.cat([t.detach().reshape(-1).to(DTYPE) for t in state.values()])
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        f.write(payload.numpy().astype("<f8").tobytes())


def load_checkpoint(
    path: Union[str, os.PathLike],
) -> Tuple[SeparatorModel, Dict[str, Any]]:
    """restores a model bit-exactly; returns it with the parsed header"""
    raw = Path(path).read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise CheckpointError(f"{path}: missing header")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable header") from e
    if header.get("format") != FORMAT_TAG:
        raise CheckpointError(f"{path}: unknown format {header.get('format')!r}")

    model = SeparatorModel(SeparatorConfig.from_dict(header["config"]), header["seed"])
    values = np.frombuffer(raw[newline + 1 :], dtype="<f8")
    expected = sum(int(np.prod(shape)) for _, shape in header["tensors"])
    if values.size != expected:
        raise CheckpointError(
            f"{path}: expected {expected} values, found {values.size}"
        )

    state, offset = {}, 0
    for name, shape in header["tensors"]:
        n = int(np.prod(shape))
        state[name] = torch.from_numpy(values[offset : offset + n].copy()).reshape(shape)
        offset += n
    model.load_state_dict(state)
    return model, header
