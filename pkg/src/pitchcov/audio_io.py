"""Mono PCM WAV input/output and band-limited sample-rate conversion.

All audio entering the package is normalized here to float64 samples in
[-1, 1] at a known rate; everything downstream consumes :class:`AudioBuffer`
and never touches integer PCM again.
"""
from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import i0

from .errors import MalformedWav, UnsupportedFormat

PCM_SCALE = 32768.0

# Resampler kernel: Kaiser-windowed sinc with KERNEL_LOBES zero crossings per
# side at the anti-alias cutoff (the support widens by source/target when
# downsampling). Beta 8.6 puts the stopband near -90 dB.
KAISER_BETA = 8.6
KERNEL_LOBES = 32


@dataclass
class AudioBuffer:
    """Mono audio: float64 samples at a fixed sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("audio must be mono (1-D samples)")
        if self.samples.size and not np.isfinite(self.samples).all():
            raise ValueError("audio samples must be finite")
        self.sample_rate_hz = int(self.sample_rate_hz)
        if self.sample_rate_hz <= 0:
            raise ValueError("sample rate must be positive")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a mono 16-bit PCM WAV file.

    Integer samples are scaled by 1/32768 into [-1, 1]. Chunks other than
    ``fmt `` and ``data`` are skipped. Anything that is not mono PCM16 raises
    :class:`UnsupportedFormat`; structural damage raises :class:`MalformedWav`.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise MalformedWav(f"{path}: not a RIFF/WAVE file")

    fmt_chunk: bytes | None = None
    data_chunk: bytes | None = None
    pos = 12
    while pos < len(raw):
        if pos + 8 > len(raw):
            raise MalformedWav(f"{path}: truncated chunk header at byte {pos}")
        chunk_id, size = struct.unpack_from("<4sI", raw, pos)
        pos += 8
        if pos + size > len(raw):
            raise MalformedWav(f"{path}: chunk {chunk_id!r} extends past end of file")
        body = raw[pos : pos + size]
        if chunk_id == b"fmt ":
            fmt_chunk = body
        elif chunk_id == b"data":
            data_chunk = body
        pos += size + (size & 1)  # chunks are word-aligned

    if fmt_chunk is None:
        raise MalformedWav(f"{path}: missing fmt chunk")
    if data_chunk is None:
        raise MalformedWav(f"{path}: missing data chunk")
    if len(fmt_chunk) < 16:
        raise MalformedWav(f"{path}: fmt chunk too short ({len(fmt_chunk)} bytes)")

    audio_format, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt_chunk, 0)
    if audio_format != 1 or bits != 16:
        raise UnsupportedFormat(
            f"{path}: only 16-bit integer PCM is supported "
            f"(format tag {audio_format}, {bits} bits)"
        )
    if channels != 1:
        raise UnsupportedFormat(f"{path}: expected mono, found {channels} channels")
    if rate == 0:
        raise MalformedWav(f"{path}: zero sample rate in header")
    if len(data_chunk) % 2:
        raise MalformedWav(f"{path}: odd data chunk length {len(data_chunk)}")

    pcm = np.frombuffer(data_chunk, dtype="<i2")
    return AudioBuffer(pcm.astype(np.float64) / PCM_SCALE, rate)


def write_wav(path: str | Path, buf: AudioBuffer) -> None:
    """Write ``buf`` as a mono 16-bit PCM WAV file.

    Samples are clipped to [-1, 1] and rounded, so a read-back differs from
    the original by at most one quantization step per sample.
    """
    pcm = np.clip(np.rint(buf.samples * PCM_SCALE), -32768, 32767).astype("<i2")
    data = pcm.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(data),
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        1,  # mono
        buf.sample_rate_hz,
        buf.sample_rate_hz * 2,  # byte rate
        2,  # block align
        16,  # bits per sample
        b"data",
        len(data),
    )
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header + data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _kernel(t: np.ndarray, cutoff: float, half_width: int) -> np.ndarray:
    """Kaiser-windowed sinc evaluated at offsets ``t`` (input-sample units)."""
    out = np.zeros_like(t)
    inside = np.abs(t) <= half_width
    x = t[inside] / half_width
    window = i0(KAISER_BETA * np.sqrt(1.0 - x * x)) / i0(KAISER_BETA)
    out[inside] = cutoff * np.sinc(cutoff * t[inside]) * window
    return out


def resample(buf: AudioBuffer, target_rate_hz: int) -> AudioBuffer:
    """Resample to ``target_rate_hz`` with a polyphase windowed-sinc kernel.

    Output sample ``j`` is the band-limited interpolation of the input at
    position ``j * source/target``; the output length is
    ``round(n_in * target/source)``, so total duration is preserved within
    one output sample. Equal rates return the buffer unchanged.
    """
    target_rate_hz = int(target_rate_hz)
    if target_rate_hz <= 0:
        raise ValueError("target rate must be positive")
    source = buf.sample_rate_hz
    if target_rate_hz == source:
        return buf

    g = math.gcd(target_rate_hz, source)
    up, down = target_rate_hz // g, source // g
    cutoff = min(1.0, up / down)  # relative to the input Nyquist
    half_width = int(math.ceil(KERNEL_LOBES / cutoff))

    n_in = buf.samples.size
    n_out = int(round(n_in * up / down))
    if n_out == 0:
        return AudioBuffer(np.zeros(0), target_rate_hz)

    padded = np.concatenate(
        [np.zeros(half_width), buf.samples, np.zeros(half_width + down + 1)]
    )
    windows = np.lib.stride_tricks.sliding_window_view(padded, 2 * half_width + 1)

    out = np.empty(n_out)
    positions = np.arange(n_out, dtype=np.int64) * down
    base = positions // up
    phase = positions - base * up  # fractional position numerator, in 1/up units

    offsets = np.arange(-half_width, half_width + 1, dtype=np.float64)
    for p in range(up):
        idx = np.nonzero(phase == p)[0]
        if idx.size == 0:
            continue
        taps = _kernel(p / up - offsets, cutoff, half_width)
        taps /= taps.sum()  # exact unity DC gain per phase
        rows = windows[base[idx[0]] :: down]
        # chunked matmul keeps the strided-view copies small
        for s in range(0, idx.size, 16384):
            e = min(s + 16384, idx.size)
            out[idx[s:e]] = rows[s:e] @ taps
    return AudioBuffer(out, target_rate_hz)
