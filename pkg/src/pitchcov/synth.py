"""Synthetic voiced stimuli with controlled F0 trajectories.

Utterances are rendered by a glottal source-filter chain: a Rosenberg-type
pulse train driven by a commanded F0 contour, shaped by a cascade of four
formant resonators whose parameters stay fixed for the whole utterance, so
the fundamental is the only thing that moves.

Two contour families are provided: a single sinusoid around 232 Hz, and a
superposition of two slower oscillations; both stay inside [60, 404] Hz by
construction.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from ._util import atomic_write_text, fmt_float
from .audio_io import AudioBuffer, write_wav
from .errors import ParamOutOfRange, UnstableFilter

CONTOUR_CENTER_HZ = 232.0
F0_FLOOR_HZ = 60.0
F0_CEIL_HZ = 404.0

SINE_AMPLITUDE_HZ = 172.0
SINE_RATE_RANGE = (1.7227, 8.6133)  # rad/s
PHASE_RANGE = (-math.pi / 2.0, math.pi / 2.0)

PAIR_AMPLITUDE_HZ = 86.0
PAIR_RATE_RANGE = (0.8613, 3.4453)  # rad/s

MECHANISM_SINUSOIDAL = "sinusoidal"
MECHANISM_COMPLICATED = "complicated"
MECHANISMS = (MECHANISM_SINUSOIDAL, MECHANISM_COMPLICATED)

# Vowel-plausible sampling boxes for the fixed per-utterance resonators.
FORMANT_RANGES_HZ = ((300.0, 900.0), (900.0, 2500.0), (2200.0, 3200.0), (3200.0, 4200.0))
BANDWIDTH_RANGE_HZ = (60.0, 160.0)

DEFAULT_OPEN_QUOTIENT = 0.6
DEFAULT_SAMPLE_RATE_HZ = 16000
DEFAULT_DURATION_S = 5.0
DEFAULT_STEP_S = 0.01

MANIFEST_COLUMNS = (
    "index,mechanism,alpha,phi,alpha1,beta1,alpha2,beta2,f1,f2,f3,f4,seed"
)


@dataclass
class F0Contour:
    """A sampled F0 trajectory plus the parameters that generated it."""

    f0_hz: np.ndarray
    step_s: float
    duration_s: float
    mechanism: str
    params: dict[str, float]

    def __post_init__(self) -> None:
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64)

    @property
    def times_s(self) -> np.ndarray:
        return np.arange(self.f0_hz.size) * self.step_s


@dataclass
class StimulusSpec:
    """Everything needed to re-render one utterance."""

    contour: F0Contour
    formants: tuple[tuple[float, float], ...]  # (frequency_hz, bandwidth_hz) x 4
    glottal_open_quotient: float = DEFAULT_OPEN_QUOTIENT
    gain: float = 1.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        freqs = [f for f, _ in self.formants]
        if any(b <= 0 for _, b in self.formants):
            raise ValueError("formant bandwidths must be positive")
        if any(f2 <= f1 for f1, f2 in zip(freqs, freqs[1:])):
            raise ValueError("formant frequencies must be strictly increasing")
        if not 0.0 < self.glottal_open_quotient < 1.0:
            raise ValueError("open quotient must lie in (0, 1)")


def _check_range(name: str, value: float, lo: float, hi: float) -> None:
    if not lo <= value <= hi:
        raise ParamOutOfRange(f"{name}={value} outside [{lo}, {hi}]")


def _contour_grid(duration_s: float, step_s: float) -> np.ndarray:
    return np.arange(int(round(duration_s / step_s))) * step_s


def sinusoidal_contour(alpha: float, phi: float,
                       duration_s: float = DEFAULT_DURATION_S,
                       step_s: float = DEFAULT_STEP_S) -> F0Contour:
    """f0(t) = 172 * sin(alpha*t + phi) + 232, sampled every ``step_s``."""
    _check_range("alpha", alpha, *SINE_RATE_RANGE)
    _check_range("phi", phi, *PHASE_RANGE)
    t = _contour_grid(duration_s, step_s)
    f0 = SINE_AMPLITUDE_HZ * np.sin(alpha * t + phi) + CONTOUR_CENTER_HZ
    return F0Contour(f0, step_s, duration_s, MECHANISM_SINUSOIDAL,
                     {"alpha": alpha, "phi": phi})


def complicated_contour(alpha1: float, beta1: float, alpha2: float, beta2: float,
                        duration_s: float = DEFAULT_DURATION_S,
                        step_s: float = DEFAULT_STEP_S) -> F0Contour:
    """Superposed oscillations: f0 = 232 + 86*(sin(a1*t+b1) + cos(a2*t+b2)).

    The summed amplitude is at most 2, so the contour stays within
    [60, 404] Hz for every admissible parameter choice.
    """
    _check_range("alpha1", alpha1, *PAIR_RATE_RANGE)
    _check_range("alpha2", alpha2, *PAIR_RATE_RANGE)
    _check_range("beta1", beta1, *PHASE_RANGE)
    _check_range("beta2", beta2, *PHASE_RANGE)
    t = _contour_grid(duration_s, step_s)
    f0 = CONTOUR_CENTER_HZ + PAIR_AMPLITUDE_HZ * (
        np.sin(alpha1 * t + beta1) + np.cos(alpha2 * t + beta2)
    )
    return F0Contour(f0, step_s, duration_s, MECHANISM_COMPLICATED,
                     {"alpha1": alpha1, "beta1": beta1,
                      "alpha2": alpha2, "beta2": beta2})


def _rosenberg_pulse(phase: np.ndarray, open_quotient: float,
                     rise_fraction: float = 2.0 / 3.0) -> np.ndarray:
    """Glottal flow evaluated on normalized phase in [0, 1)."""
    t_rise = open_quotient * rise_fraction
    t_fall = open_quotient - t_rise
    out = np.zeros_like(phase)
    rising = phase < t_rise
    out[rising] = 0.5 * (1.0 - np.cos(np.pi * phase[rising] / t_rise))
    falling = (phase >= t_rise) & (phase < open_quotient)
    out[falling] = np.cos(0.5 * np.pi * (phase[falling] - t_rise) / t_fall)
    return out


def glottal_source(contour: F0Contour, sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
                   open_quotient: float = DEFAULT_OPEN_QUOTIENT) -> AudioBuffer:
    """Render a glottal pulse train following ``contour``.

    The instantaneous frequency is the contour linearly interpolated to the
    audio rate; phase accumulates as phi[n+1] = phi[n] + f0(t_n)/rate, and the
    pulse shape is read off the fractional phase, so the number of completed
    cycles equals the integral of f0 to within one cycle.
    """
    n = int(round(contour.duration_s * sample_rate_hz))
    if n == 0 or contour.f0_hz.size == 0:
        return AudioBuffer(np.zeros(0), sample_rate_hz)
    if contour.f0_hz.max() >= sample_rate_hz / 2.0:
        raise ValueError("contour exceeds Nyquist")
    t = np.arange(n) / sample_rate_hz
    f0 = np.interp(t, contour.times_s, contour.f0_hz)
    phase = np.cumsum(f0) / sample_rate_hz
    phase -= phase[0]  # first sample starts a cycle
    return AudioBuffer(_rosenberg_pulse(phase % 1.0, open_quotient), sample_rate_hz)


def resonator_coefficients(frequency_hz: float, bandwidth_hz: float,
                           sample_rate_hz: int) -> tuple[float, float]:
    """(pole radius, pole angle) of a two-pole resonator."""
    radius = math.exp(-math.pi * bandwidth_hz / sample_rate_hz)
    angle = 2.0 * math.pi * frequency_hz / sample_rate_hz
    return radius, angle


def vocal_tract_filter(source: AudioBuffer,
                       formants: tuple[tuple[float, float], ...]) -> AudioBuffer:
    """Shape ``source`` with a cascade of two-pole formant resonators.

    The result is peak-normalized to 0.9 so downstream quantization to PCM16
    never clips.
    """
    rate = source.sample_rate_hz
    freqs = [f for f, _ in formants]
    if any(f2 <= f1 for f1, f2 in zip(freqs, freqs[1:])) or any(
        f >= rate / 2.0 for f in freqs
    ):
        raise ValueError("formants must increase and stay below Nyquist")
    y = source.samples
    for frequency, bandwidth in formants:
        radius, angle = resonator_coefficients(frequency, bandwidth, rate)
        if radius >= 1.0:
            raise UnstableFilter(
                f"resonator at {frequency} Hz has pole radius {radius} >= 1"
            )
        y = lfilter([1.0], [1.0, -2.0 * radius * math.cos(angle), radius * radius], y)
    peak = np.abs(y).max() if y.size else 0.0
    if peak > 0:
        y = y * (0.9 / peak)
    return AudioBuffer(y, rate)


def utterance_seed(master_seed: int, index: int) -> int:
    """Deterministic 64-bit seed for one utterance of a corpus."""
    state = np.random.SeedSequence([int(master_seed), int(index)])
    return int(state.generate_state(1, np.uint64)[0])


def generate_utterance(mechanism: str, index: int, master_seed: int,
                       duration_s: float = DEFAULT_DURATION_S,
                       sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
                       step_s: float = DEFAULT_STEP_S,
                       open_quotient: float = DEFAULT_OPEN_QUOTIENT
                       ) -> tuple[StimulusSpec, AudioBuffer]:
    """Draw one utterance's parameters and render it.

    Contour parameters and formants are drawn from their documented ranges
    with an RNG seeded by (master_seed, index), so corpora reproduce exactly
    regardless of generation order.
    """
    if mechanism not in MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    seed = utterance_seed(master_seed, index)
    rng = np.random.default_rng(seed)

    if mechanism == MECHANISM_SINUSOIDAL:
        contour = sinusoidal_contour(
            rng.uniform(*SINE_RATE_RANGE), rng.uniform(*PHASE_RANGE),
            duration_s, step_s,
        )
    else:
        contour = complicated_contour(
            rng.uniform(*PAIR_RATE_RANGE), rng.uniform(*PHASE_RANGE),
            rng.uniform(*PAIR_RATE_RANGE), rng.uniform(*PHASE_RANGE),
            duration_s, step_s,
        )

    while True:  # the F2/F3 boxes overlap; redraw until strictly increasing
        freqs = [rng.uniform(lo, hi) for lo, hi in FORMANT_RANGES_HZ]
        if all(f2 > f1 for f1, f2 in zip(freqs, freqs[1:])):
            break
    bandwidths = [rng.uniform(*BANDWIDTH_RANGE_HZ) for _ in FORMANT_RANGES_HZ]
    formants = tuple(zip(freqs, bandwidths))

    spec = StimulusSpec(contour, formants, open_quotient, 1.0, seed)
    audio = vocal_tract_filter(
        glottal_source(contour, sample_rate_hz, open_quotient), formants
    )
    if spec.gain != 1.0:
        audio = AudioBuffer(audio.samples * spec.gain, sample_rate_hz)
    return spec, audio


def generate_corpus(mechanism: str, n_utterances: int = 60,
                    duration_s: float = DEFAULT_DURATION_S, master_seed: int = 0,
                    sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
                    step_s: float = DEFAULT_STEP_S,
                    open_quotient: float = DEFAULT_OPEN_QUOTIENT
                    ) -> list[tuple[StimulusSpec, AudioBuffer]]:
    """Generate ``n_utterances`` independent utterances of one mechanism."""
    if n_utterances < 1:
        raise ValueError("n_utterances must be at least 1")
    return [
        generate_utterance(mechanism, i, master_seed, duration_s,
                           sample_rate_hz, step_s, open_quotient)
        for i in range(n_utterances)
    ]


def manifest_row(index: int, spec: StimulusSpec) -> str:
    p = spec.contour.params
    fields = [
        str(index),
        spec.contour.mechanism,
        fmt_float(p["alpha"]) if "alpha" in p else "",
        fmt_float(p["phi"]) if "phi" in p else "",
        fmt_float(p["alpha1"]) if "alpha1" in p else "",
        fmt_float(p["beta1"]) if "beta1" in p else "",
        fmt_float(p["alpha2"]) if "alpha2" in p else "",
        fmt_float(p["beta2"]) if "beta2" in p else "",
    ]
    fields += [fmt_float(f) for f, _ in spec.formants]
    fields.append(str(spec.rng_seed))
    return ",".join(fields)


def write_corpus(out_dir: str | Path,
                 items: list[tuple[StimulusSpec, AudioBuffer]]) -> Path:
    """Write WAVs plus a manifest CSV; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [MANIFEST_COLUMNS]
    for index, (spec, audio) in enumerate(items):
        write_wav(out_dir / f"{spec.contour.mechanism}_{index}.wav", audio)
        lines.append(manifest_row(index, spec))
    manifest = out_dir / "manifest.csv"
    atomic_write_text(manifest, "\n".join(lines) + "\n")
    return manifest


def read_manifest(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
