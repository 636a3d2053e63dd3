"""Toy harmonic stem synthesis standing in for rendered instrument stems"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from spatialmss.audio.signal import DEFAULT_SAMPLE_RATE, MonoSignal

PEAK_LEVEL = 0.5
# major pentatonic offsets in semitones, the pitch set of the toy recipes
PENTATONIC = (0, 2, 4, 7, 9, 12)


class Note(BaseModel):
    model_config = ConfigDict(frozen=True)

    onset: float = Field(ge=0.0)
    duration: float = Field(gt=0.0)
    semitone: int = 0


class Envelope(BaseModel):
    """linear attack followed by an exponential decay, both in seconds"""

    model_config = ConfigDict(frozen=True)

    attack: float = Field(ge=0.0)
    decay: float = Field(gt=0.0)


class ToyStemSpec(BaseModel):
    """Recipe of a synthetic instrument stem

    Instrument identity is the harmonic recipe (fundamental, weights, envelope);
    two stems of the same class share a recipe and differ in seed or notes.
    """

    model_config = ConfigDict(frozen=True)

    source_label: str
    fundamental: float = Field(gt=0.0)
    harmonic_weights: Tuple[float, ...]
    envelope: Optional[Envelope] = None
    notes: Optional[Tuple[Note, ...]] = None
    note_length: float = Field(default=0.5, gt=0.0)
    # semitone offsets drawn per seeded note; (0,) keeps every note on the fundamental
    pitch_set: Tuple[int, ...] = (0,)
    rests: bool = False
    seed: int = 0

    @field_validator("harmonic_weights")
    @classmethod
    def _finite_weights(cls, weights):
        if not all(np.isfinite(w) for w in weights):
            raise ValueError("harmonic weights must be finite")
        return weights

    @field_validator("pitch_set")
    @classmethod
    def _non_empty_pitches(cls, pitches):
        if not pitches:
            raise ValueError("pitch_set must not be empty")
        return pitches

    def with_seed(self, seed: int, label: Optional[str] = None) -> ToyStemSpec:
        return self.model_copy(
            update={"seed": seed, "source_label": label or self.source_label}
        )


def _random_notes(spec: ToyStemSpec, duration: float, rng: np.random.Generator):
    """seeded onsets and durations; without rests the notes tile the stem from t = 0"""
    notes: List[Note] = []
    t = float(rng.uniform(0.0, spec.note_length / 2)) if spec.rests else 0.0
    while t < duration:
        length = float(spec.note_length * rng.uniform(0.5, 1.5))
        semitone = int(rng.choice(spec.pitch_set))
        notes.append(Note(onset=t, duration=length, semitone=semitone))
        if spec.rests:
            t += length * float(rng.choice([1.0, 1.0, 1.5, 2.0]))
        else:
            t += length
    return notes


def _envelope(t: np.ndarray, duration: float, envelope: Optional[Envelope]):
    if envelope is None:
        return np.ones_like(t)
    if envelope.attack > 0:
        rise = np.clip(t / envelope.attack, 0.0, 1.0)
    else:
        rise = np.ones_like(t)
    fall = np.exp(-np.maximum(t - envelope.attack, 0.0) / envelope.decay)
    return rise * fall * (t < duration)


def synth_stem(
    spec: ToyStemSpec, duration: float, sample_rate: int = DEFAULT_SAMPLE_RATE
) -> MonoSignal:
    """renders a stem: weighted harmonics gated by notes and envelope

    Parameters
    ----------
    spec : ToyStemSpec
        instrument recipe and seed
    duration : float
        length in seconds, > 0
    sample_rate : int
        Hz, default 16 kHz

    Returns
    -------
    MonoSignal
        peak-normalised to 0.5 unless silent; bit-identical for equal specs
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    n_samples = int(round(duration * sample_rate))
    out = np.zeros(n_samples)
    if not any(spec.harmonic_weights):
        return MonoSignal(out, sample_rate)

    rng = np.random.default_rng(spec.seed)
    phases = rng.uniform(0.0, 2 * np.pi, size=len(spec.harmonic_weights))
    notes = spec.notes if spec.notes is not None else _random_notes(spec, duration, rng)
    nyquist = sample_rate / 2

    for note in notes:
        start = int(round(note.onset * sample_rate))
        stop = min(n_samples, int(round((note.onset + note.duration) * sample_rate)))
        if start >= stop:
            continue
        t = np.arange(stop - start) / sample_rate
        # stem clock: tied notes of one pitch are phase-continuous
        clock = np.arange(start, stop) / sample_rate
        f0 = spec.fundamental * 2.0 ** (note.semitone / 12)
        tone = np.zeros_like(t)
        for h, (weight, phase) in enumerate(zip(spec.harmonic_weights, phases), 1):
            if weight == 0.0 or h * f0 >= nyquist:
                continue
            tone += weight * np.sin(2 * np.pi * h * f0 * clock + phase)
        out[start:stop] += tone * _envelope(t, note.duration, spec.envelope)

    peak = np.max(np.abs(out))
    if peak > 0:
        out *= PEAK_LEVEL / peak
    return MonoSignal(out, sample_rate)


GUITAR = ToyStemSpec(
    source_label="Gtr",
    fundamental=196.0,
    harmonic_weights=(1.0, 0.6, 0.45, 0.3, 0.2, 0.12, 0.08),
    envelope=Envelope(attack=0.005, decay=0.35),
    note_length=0.35,
    pitch_set=PENTATONIC,
    rests=True,
)
STRINGS = ToyStemSpec(
    source_label="Str",
    fundamental=293.7,
    harmonic_weights=(1.0, 0.8, 0.65, 0.5, 0.4, 0.3, 0.2, 0.15),
    envelope=Envelope(attack=0.15, decay=1.5),
    note_length=0.9,
    pitch_set=PENTATONIC,
    rests=True,
)
PIANO = ToyStemSpec(
    source_label="Pia",
    fundamental=261.6,
    harmonic_weights=(1.0, 0.45, 0.25, 0.12, 0.06),
    envelope=Envelope(attack=0.002, decay=0.6),
    note_length=0.5,
    pitch_set=PENTATONIC,
    rests=True,
)
BASS = ToyStemSpec(
    source_label="Bas",
    fundamental=82.4,
    harmonic_weights=(1.0, 0.55, 0.25, 0.1),
    envelope=Envelope(attack=0.01, decay=0.5),
    note_length=0.6,
    pitch_set=PENTATONIC,
    rests=True,
)

TOY_RECIPES: Dict[str, ToyStemSpec] = {
    "guitar": GUITAR,
    "strings": STRINGS,
    "piano": PIANO,
    "bass": BASS,
}


def task_recipes(task: str, seed: int = 0) -> List[ToyStemSpec]:
    """stem recipes of a task in table order

    4S is guitar, strings, piano, bass; 4S2G swaps strings for a second guitar
    that shares the guitar recipe under a different seed.
    """
    if task == "4S":
        recipes = [GUITAR, STRINGS, PIANO, BASS]
        return [r.with_seed(seed * 16 + k) for k, r in enumerate(recipes)]
    if task == "4S2G":
        return [
            GUITAR.with_seed(seed * 16, "Gtr1"),
            GUITAR.with_seed(seed * 16 + 1, "Gtr2"),
            PIANO.with_seed(seed * 16 + 2),
            BASS.with_seed(seed * 16 + 3),
        ]
    raise ValueError(f"unknown task {task!r}, expected 4S or 4S2G")
