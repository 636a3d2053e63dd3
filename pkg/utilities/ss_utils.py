import random
from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import torch  # noqa: E402


def set_seed(seed: int):
    """
    Set the seed for all relevant random number generators to ensure reproducibility.

    Parameters:
    seed (int): The seed value to set.
    """
    random.seed(seed)  # Python's built-in random
    np.random.seed(seed)  # Numpy's random
    torch.manual_seed(seed)  # Torch's random

    # bit-identical reruns need deterministic kernels
    torch.use_deterministic_algorithms(True, warn_only=True)
    torch.backends.cudnn.deterministic = True
    torch.backends.cudnn.benchmark = False


def standardize_stats(data: torch.Tensor, dim=0, eps: float = 1e-8):
    """mean and (population) std + eps of data along dim"""
    mean = data.mean(dim=dim)
    std = data.std(dim=dim, unbiased=False) + eps  # Avoid division by zero
    return mean, std


def plot_loss_history(history: pd.DataFrame, path: Union[str, Path]):
    """plots per-epoch loss curves to a PNG file"""
    fig, ax = plt.subplots(figsize=(12, 6))

    ax.plot(history["epoch"], history["freq_loss"], label="Frequency MSE", color="blue")
    ax.plot(history["epoch"], history["wsdr_loss"], label="wSDR", color="orange")
    ax.plot(history["epoch"], history["total"], label="Total", color="green")
    ax.set_title("Training Loss Over Epochs")
    ax.set_xlabel("Epoch")
    ax.set_ylabel("Loss")
    ax.legend()
    ax.grid(True)
    fig.savefig(path)
    plt.close(fig)


def plot_embedding_map(
    embeddings: np.ndarray, angles: Sequence[float], path: Union[str, Path]
):
    """heatmap of one embedding per row, angles on the y axis"""
    fig, ax = plt.subplots(figsize=(12, 6))
    image = ax.imshow(
        embeddings,
        aspect="auto",
        cmap="RdBu",
        vmin=-1.0,
        vmax=1.0,
        extent=(0, embeddings.shape[1], angles[-1], angles[0]),
    )
    ax.set_title("Spatial Embeddings")
    ax.set_xlabel("Dimension")
    ax.set_ylabel("Angle (degrees)")
    fig.colorbar(image, ax=ax)
    fig.savefig(path)
    plt.close(fig)
