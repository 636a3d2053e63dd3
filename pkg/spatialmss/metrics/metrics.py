"""Time-domain separation metrics and per-scene evaluation reports"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger

from spatialmss.audio.signal import StereoSignal
from spatialmss.errors import ShapeMismatchError

CAP_DB = 100.0
# error energy below this fraction of the signal energy reports the cap
_CAP_RATIO = 1e-20
AVG_COLUMN = "Avg."
ROWS = ["si_sdr", "sdr", "mixture_si_sdr", "mixture_sdr", "delta_si_sdr", "delta_sdr"]
CSV_FLOAT_FORMAT = "%.6f"


def _pair(est, target):
    est = np.asarray(est, dtype=np.float64).reshape(-1)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    if est.shape != target.shape:
        raise ShapeMismatchError(
            f"estimate has {est.size} samples, target has {target.size}"
        )
    target_energy = float(np.dot(target, target))
    if target_energy == 0.0:
        raise ValueError("silent target")
    return est, target, target_energy


def _ratio_db(signal_energy: float, error_energy: float) -> float:
    if error_energy < _CAP_RATIO * signal_energy:
        return CAP_DB
    return float(10 * np.log10(signal_energy / error_energy))


def si_sdr(est: np.ndarray, target: np.ndarray) -> float:
    """scale-invariant SDR in dB, capped at +100 dB

    The estimate is projected onto the target; the projection is the signal part
    and the residual the error.
    """
    est, target, target_energy = _pair(est, target)
    scaled = (np.dot(est, target) / target_energy) * target
    error = est - scaled
    return _ratio_db(float(np.dot(scaled, scaled)), float(np.dot(error, error)))


def sdr(est: np.ndarray, target: np.ndarray) -> float:
    """plain SDR in dB, capped at +100 dB"""
    est, target, target_energy = _pair(est, target)
    error = target - est
    return _ratio_db(target_energy, float(np.dot(error, error)))


def _stereo_score(metric, est: StereoSignal, target: StereoSignal, label: str) -> float:
    """metric averaged over the channels whose target is not silent"""
    if len(est) != len(target):
        raise ShapeMismatchError(
            f"{label}: estimate has {len(est)} samples, target has {len(target)}"
        )
    scores = []
    for name, e, t in (("left", est.left, target.left), ("right", est.right, target.right)):
        if not np.any(t):
            logger.warning(f"{label}: silent {name} target channel skipped")
            continue
        scores.append(metric(e, t))
    if not scores:
        raise ValueError(f"{label}: silent target")
    return float(np.mean(scores))


@dataclass
class EvalReport:
    """Per-source metrics of one separated scene

    Parameters
    ----------
    labels : List[str]
        source labels in stream order
    si_sdr, sdr : List[float]
        metric of each estimate against its target
    mixture_si_sdr, mixture_sdr : List[float]
        the same metric with the mixture standing in for every estimate
    """

    labels: List[str]
    si_sdr: List[float]
    sdr: List[float]
    mixture_si_sdr: List[float]
    mixture_sdr: List[float]
    delta_si_sdr: List[float] = field(init=False)
    delta_sdr: List[float] = field(init=False)

    def __post_init__(self):
        n = len(self.labels)
        for name in ("si_sdr", "sdr", "mixture_si_sdr", "mixture_sdr"):
            if len(getattr(self, name)) != n:
                raise ShapeMismatchError(f"{name} needs one value per source")
        self.delta_si_sdr = [e - m for e, m in zip(self.si_sdr, self.mixture_si_sdr)]
        self.delta_sdr = [e - m for e, m in zip(self.sdr, self.mixture_sdr)]

    def average(self, name: str) -> float:
        return float(np.mean(getattr(self, name)))

    def to_frame(self) -> pd.DataFrame:
        """rows are metrics, columns the source labels plus the average"""
        data = {row: getattr(self, row) + [self.average(row)] for row in ROWS}
        return pd.DataFrame.from_dict(
            data, orient="index", columns=list(self.labels) + [AVG_COLUMN]
        )

    def to_csv(self, path: Union[str, os.PathLike]):
        self.to_frame().to_csv(path, index_label="metric", float_format=CSV_FLOAT_FORMAT)


def evaluate_scene(
    estimates: Sequence[StereoSignal],
    targets: Sequence[StereoSignal],
    mixture: StereoSignal,
    labels: Optional[Sequence[str]] = None,
) -> EvalReport:
    """scores estimates against targets in stream order; no permutation search"""
    if len(estimates) != len(targets):
        raise ShapeMismatchError(
            f"{len(estimates)} estimates for {len(targets)} targets"
        )
    labels = list(labels) if labels else [f"source{k}" for k in range(len(targets))]
    if len(labels) != len(targets):
        raise ShapeMismatchError("one label per source is required")

    scores: Dict[str, List[float]] = {name: [] for name in ROWS[:4]}
    for label, est, target in zip(labels, estimates, targets):
        scores["si_sdr"].append(_stereo_score(si_sdr, est, target, label))
        scores["sdr"].append(_stereo_score(sdr, est, target, label))
        scores["mixture_si_sdr"].append(_stereo_score(si_sdr, mixture, target, label))
        scores["mixture_sdr"].append(_stereo_score(sdr, mixture, target, label))
    return EvalReport(labels, **scores)


def evaluate_many(reports: Sequence[EvalReport]) -> EvalReport:
    """source-wise mean of several reports sharing labels"""
    if not reports:
        raise ValueError("at least one report is required")
    labels = reports[0].labels
    if any(r.labels != labels for r in reports):
        raise ShapeMismatchError("reports disagree on source labels")

    def mean_of(name):
        return np.mean([getattr(r, name) for r in reports], axis=0).tolist()

    return EvalReport(
        labels,
        mean_of("si_sdr"),
        mean_of("sdr"),
        mean_of("mixture_si_sdr"),
        mean_of("mixture_sdr"),
    )
