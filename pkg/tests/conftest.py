"""Shared fixtures and corpus builders for the test suite."""
from __future__ import annotations

import time

import numpy as np
import pytest

from pitchcov import mfcc, track_f0
from pitchcov.dsp import FrameSpec, MfccMatrix
from pitchcov.evaluation import Corpus, Utterance
from pitchcov.pitch import PitchTrack
from pitchcov.synth import generate_corpus


def sawtooth(freq_hz: float, duration_s: float, rate: int = 16000) -> np.ndarray:
    t = np.arange(int(round(duration_s * rate))) / rate
    return 2.0 * ((freq_hz * t) % 1.0) - 1.0


def planted_linear_corpus(condition_id: str, weights: np.ndarray, seed: int,
                          n_utts: int = 8, n_frames: int = 120,
                          noise_targets: bool = False) -> Corpus:
    """Corpus whose targets are an exact linear map of the features.

    Targets are converted to F0 through one global exponential map, so the
    semitone transform (relative to any base) recovers a linear function of
    the features up to a constant shift. With ``noise_targets`` the targets
    are instead independent of the features.
    """
    rng = np.random.default_rng(seed)
    spec = FrameSpec()
    n_dim = weights.size
    utterances = []
    for u in range(n_utts):
        features = rng.normal(size=(n_frames, n_dim))
        if noise_targets:
            semitones = rng.normal(size=n_frames) * 2.0 + 12.0
        else:
            semitones = features @ weights + 3.0
        times = (280 + np.arange(n_frames) * 160) / 16000.0
        f0 = 100.0 * np.exp2(semitones / 12.0)
        utterances.append(
            Utterance(
                f"{condition_id}_{u}",
                MfccMatrix(features, times, spec),
                PitchTrack(times, f0, np.ones(n_frames, dtype=bool)),
            )
        )
    return Corpus(condition_id, utterances)


def analyzed_corpus(mechanism: str, n_utterances: int, duration_s: float,
                    master_seed: int):
    """Generate and analyze a corpus; returns (Corpus, stimulus specs, seconds)."""
    start = time.perf_counter()
    items = generate_corpus(mechanism, n_utterances=n_utterances,
                            duration_s=duration_s, master_seed=master_seed)
    utterances = []
    specs = []
    for i, (spec, audio) in enumerate(items):
        utterances.append(
            Utterance(f"{mechanism}_{i}", mfcc(audio), track_f0(audio))
        )
        specs.append(spec)
    elapsed = time.perf_counter() - start
    return Corpus(mechanism, utterances), specs, elapsed


@pytest.fixture(scope="session")
def sine_corpus():
    return analyzed_corpus("sinusoidal", 60, 5.0, 7)


@pytest.fixture(scope="session")
def complicated_corpus():
    return analyzed_corpus("complicated", 60, 5.0, 7)
