"""Single-frame spectral features.

The chain is: Hann-windowed frames -> power spectrum -> Slaney-style mel
filterbank -> natural log (floored) -> orthonormal DCT-II -> cepstral
coefficients. Defaults produce 40 coefficients from a 35 ms window advanced
in 10 ms steps.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import atomic_write_text, fmt_float
from .audio_io import AudioBuffer
from .errors import InvalidRange

LOG_FLOOR = 1e-10

# Slaney mel scale: linear below the break frequency, logarithmic above.
_MEL_BREAK_HZ = 1000.0
_MEL_PER_HZ = 3.0 / 200.0  # 15 mels at 1 kHz
_LOG_STEP = np.log(6.4) / 27.0


@dataclass
class FrameSpec:
    """Analysis-frame geometry and filterbank sizing.

    ``n_fft=None`` resolves to the smallest power of two holding one window;
    ``fmax_hz=None`` resolves to the Nyquist frequency.
    """

    window_ms: float = 35.0
    step_ms: float = 10.0
    n_fft: int | None = None
    n_mels: int = 40
    n_mfcc: int = 40
    fmin_hz: float = 0.0
    fmax_hz: float | None = None

    def __post_init__(self) -> None:
        if self.window_ms <= 0 or self.step_ms <= 0:
            raise ValueError("window_ms and step_ms must be positive")
        if self.step_ms > self.window_ms:
            raise ValueError("step_ms must not exceed window_ms")
        if self.n_mfcc > self.n_mels:
            raise ValueError("n_mfcc must not exceed n_mels")

    def window_samples(self, sample_rate_hz: int) -> int:
        return int(round(self.window_ms * sample_rate_hz / 1000.0))

    def step_samples(self, sample_rate_hz: int) -> int:
        return int(round(self.step_ms * sample_rate_hz / 1000.0))

    def fft_size(self, sample_rate_hz: int) -> int:
        win = self.window_samples(sample_rate_hz)
        if self.n_fft is None:
            return 1 << (win - 1).bit_length()
        if self.n_fft < win:
            raise ValueError(f"n_fft={self.n_fft} smaller than window ({win} samples)")
        return self.n_fft


@dataclass
class MfccMatrix:
    """Cepstral coefficients per frame plus the frame-center times."""

    coeffs: np.ndarray  # (n_frames, n_mfcc)
    frame_times_s: np.ndarray
    spec: FrameSpec = field(default_factory=FrameSpec)

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        self.frame_times_s = np.asarray(self.frame_times_s, dtype=np.float64)
        if self.coeffs.ndim != 2:
            raise ValueError("coeffs must be 2-D")
        if self.coeffs.shape[0] != self.frame_times_s.size:
            raise ValueError("one frame time per coefficient row required")
        if self.coeffs.size and not np.isfinite(self.coeffs).all():
            raise ValueError("coefficients must be finite")
        if self.frame_times_s.size > 1:
            steps = np.diff(self.frame_times_s)
            if steps.min() <= 0 or np.ptp(steps) > 1e-6:
                raise ValueError("frame times must increase by one constant step")

    @property
    def n_frames(self) -> int:
        return self.coeffs.shape[0]


def hann_window(length: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)


def frame_signal(buf: AudioBuffer, spec: FrameSpec | None = None) -> np.ndarray:
    """Slice ``buf`` into Hann-windowed frames (rows).

    Frames never extend past the signal: the count is
    ``(n - window) // step + 1`` for ``n >= window`` and zero otherwise.
    """
    spec = spec or FrameSpec()
    win = spec.window_samples(buf.sample_rate_hz)
    step = spec.step_samples(buf.sample_rate_hz)
    if buf.samples.size < win:
        return np.zeros((0, win))
    frames = np.lib.stride_tricks.sliding_window_view(buf.samples, win)[::step]
    return frames * hann_window(win)


def frame_times(n_frames: int, spec: FrameSpec, sample_rate_hz: int) -> np.ndarray:
    """Frame-center times: (window/2 + i*step) / rate."""
    win = spec.window_samples(sample_rate_hz)
    step = spec.step_samples(sample_rate_hz)
    return (win / 2.0 + np.arange(n_frames) * step) / sample_rate_hz


def power_spectrum(frame: np.ndarray, n_fft: int) -> np.ndarray:
    """One-sided power spectrum |DFT_k|^2, k = 0..n_fft/2."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1] > n_fft:
        raise ValueError("frame longer than n_fft")
    spectrum = np.fft.rfft(frame, n=n_fft)
    return np.abs(spectrum) ** 2


def hz_to_mel(hz):
    """Hz to Slaney mels (1 kHz -> 15)."""
    hz = np.asarray(hz, dtype=np.float64)
    mel = hz * _MEL_PER_HZ
    above = hz >= _MEL_BREAK_HZ
    if np.any(above):
        mel = np.where(
            above,
            _MEL_BREAK_HZ * _MEL_PER_HZ
            + np.log(np.maximum(hz, _MEL_BREAK_HZ) / _MEL_BREAK_HZ) / _LOG_STEP,
            mel,
        )
    return mel if mel.ndim else float(mel)


def mel_to_hz(mel):
    mel = np.asarray(mel, dtype=np.float64)
    break_mel = _MEL_BREAK_HZ * _MEL_PER_HZ
    hz = mel / _MEL_PER_HZ
    above = mel >= break_mel
    if np.any(above):
        hz = np.where(
            above, _MEL_BREAK_HZ * np.exp(_LOG_STEP * (mel - break_mel)), hz
        )
    return hz if hz.ndim else float(hz)


def mel_filterbank(spec: FrameSpec, sample_rate_hz: int) -> np.ndarray:
    """Triangular mel filterbank, (n_mels, n_fft//2 + 1).

    Centers are equally spaced on the Slaney mel scale between ``fmin_hz``
    and ``fmax_hz``; each triangle is area-normalized by 2/(upper - lower).
    """
    fmax = spec.fmax_hz if spec.fmax_hz is not None else sample_rate_hz / 2.0
    if spec.fmin_hz >= fmax:
        raise InvalidRange(f"fmin {spec.fmin_hz} >= fmax {fmax}")
    if fmax > sample_rate_hz / 2.0:
        raise InvalidRange(f"fmax {fmax} above Nyquist {sample_rate_hz / 2.0}")

    n_fft = spec.fft_size(sample_rate_hz)
    edges_hz = mel_to_hz(
        np.linspace(hz_to_mel(spec.fmin_hz), hz_to_mel(fmax), spec.n_mels + 2)
    )
    bin_hz = np.arange(n_fft // 2 + 1) * sample_rate_hz / n_fft

    weights = np.zeros((spec.n_mels, bin_hz.size))
    for m in range(spec.n_mels):
        lower, center, upper = edges_hz[m : m + 3]
        rising = (bin_hz - lower) / (center - lower)
        falling = (upper - bin_hz) / (upper - center)
        weights[m] = np.maximum(0.0, np.minimum(rising, falling))
        weights[m] *= 2.0 / (upper - lower)
    return weights


def dct_basis(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis; row k dotted with x gives coefficient k."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    basis = np.sqrt(2.0 / n) * np.cos(np.pi * (i + 0.5) * k / n)
    basis[0] = np.sqrt(1.0 / n)
    return basis


def mfcc(buf: AudioBuffer, spec: FrameSpec | None = None) -> MfccMatrix:
    """Extract cepstral coefficients from ``buf``.

    Parameters
    ----------
    buf:
        Input audio.
    spec:
        Frame geometry; defaults give 40 coefficients per 35 ms frame.

    Returns
    -------
    MfccMatrix
        ``(n_frames, n_mfcc)`` coefficients with frame-center times.
    """
    spec = spec or FrameSpec()
    rate = buf.sample_rate_hz
    frames = frame_signal(buf, spec)
    n_fft = spec.fft_size(rate)
    filterbank = mel_filterbank(spec, rate)
    basis = dct_basis(spec.n_mels)[: spec.n_mfcc]

    if frames.shape[0] == 0:
        coeffs = np.zeros((0, spec.n_mfcc))
    else:
        power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
        energies = power @ filterbank.T
        log_energies = np.log(np.maximum(energies, LOG_FLOOR))
        coeffs = log_energies @ basis.T
    return MfccMatrix(coeffs, frame_times(frames.shape[0], spec, rate), spec)


def write_mfcc_csv(path: str | Path, matrix: MfccMatrix) -> None:
    """Write ``time_s,c0,...,c{n-1}`` rows with 9 significant digits."""
    header = "time_s," + ",".join(f"c{i}" for i in range(matrix.coeffs.shape[1]))
    lines = [header]
    for t, row in zip(matrix.frame_times_s, matrix.coeffs):
        lines.append(",".join([fmt_float(t)] + [fmt_float(v) for v in row]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_mfcc_csv(path: str | Path) -> MfccMatrix:
    """Read a matrix written by :func:`write_mfcc_csv`.

    The frame spec is reconstructed from the data (step from the time grid);
    window-level fields keep their defaults.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "time_s":
        raise ValueError(f"{path}: not an MFCC CSV")
    n_coeff = len(rows[0]) - 1
    times = np.array([float(r[0]) for r in rows[1:]])
    coeffs = np.array([[float(v) for v in r[1:]] for r in rows[1:]]).reshape(
        len(rows) - 1, n_coeff
    )
    step_ms = float(np.diff(times).mean() * 1000.0) if times.size > 1 else 10.0
    spec = FrameSpec(
        window_ms=max(FrameSpec.window_ms, step_ms),
        step_ms=step_ms,
        n_mels=max(n_coeff, FrameSpec.n_mels),
        n_mfcc=n_coeff,
    )
    return MfccMatrix(coeffs, times, spec)
