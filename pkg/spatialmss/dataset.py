from typing import List, Optional, Sequence

import numpy as np
import torch
from torch.utils.data import Dataset

from spatialmss.audio.signal import frame_count, stft_tensor
from spatialmss.mixing.scene import Scene, mix_scene
from spatialmss.model.separator import DTYPE, stacked_magnitude


class SceneSegmentDataset(Dataset):
    """Cuts every scene into contiguous segments of `segment_frames` STFT frames

    Segments start on the scene's frame grid, so the STFT of a segment equals the
    corresponding frames of the scene's STFT and the inverse STFT of a segment
    covers it completely.

    Parameters
    ----------
    Dataset : torch.utils.data.dataset.Dataset
        ABC from torch utils class that represents a dataset
    """

    def __init__(
        self,
        scenes: Sequence[Scene],
        frame_size: int,
        hop: int,
        segment_frames: int = 32,
        step_frames: Optional[int] = None,
    ):
        if not scenes:
            raise ValueError("at least one scene is required")
        self.frame_size = frame_size
        self.hop = hop
        self.segment_frames = segment_frames
        self.step_frames = step_frames or segment_frames
        self.segment_length = (segment_frames - 1) * hop + frame_size
        self.n_sources = scenes[0].K

        self.mixtures: List[torch.Tensor] = []
        self.targets: List[torch.Tensor] = []
        self.index: List[tuple] = []
        for i, scene in enumerate(scenes):
            if scene.K != self.n_sources:
                raise ValueError("all scenes must have the same number of sources")
            mixture, targets = mix_scene(scene)
            self.mixtures.append(torch.from_numpy(mixture.to_array()).to(DTYPE))
            self.targets.append(
                torch.from_numpy(np.stack([t.to_array() for t in targets])).to(DTYPE)
            )
            n_frames = frame_count(scene.n_samples, frame_size, hop)
            last_start = n_frames - segment_frames
            if scene.n_samples < self.segment_length:
                raise ValueError(
                    f"scene {i} has {scene.n_samples} samples, "
                    f"a segment needs {self.segment_length}"
                )
            for start in range(0, last_start + 1, self.step_frames):
                offset = start * hop
                if offset + self.segment_length <= scene.n_samples:
                    self.index.append((i, offset))

    def __len__(self):
        return len(self.index)

    def __getitem__(self, idx):
        scene_idx, offset = self.index[idx]
        end = offset + self.segment_length
        return (
            self.mixtures[scene_idx][:, offset:end],
            self.targets[scene_idx][..., offset:end],
            scene_idx,
        )

    def magnitude_frames(self) -> torch.Tensor:
        """stacked mixture magnitudes of all scenes as (n_frames, 2F) rows"""
        frames = [
            stacked_magnitude(stft_tensor(m, self.frame_size, self.hop)).transpose(0, 1)
            for m in self.mixtures
        ]
        return torch.cat(frames)
