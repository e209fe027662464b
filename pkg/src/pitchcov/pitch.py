"""Fundamental-frequency tracking and the semitone target transform.

The tracker scores candidate periods per frame with the normalized
cross-correlation function (NCCF) and picks a path through them with a
Viterbi search that trades correlation strength against pitch jumps and
voicing flips. Frames with no correlation peak above the voicing threshold
are unvoiced.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import atomic_write_text, fmt_float
from .audio_io import AudioBuffer
from .errors import EmptyInput, NonPositiveBase, RateTooLow

_MAX_CANDIDATES = 8
_TINY = 1e-12


@dataclass
class PitchParams:
    """Search range, frame geometry, and path costs for :func:`track_f0`.

    ``lag_bias`` is an absolute per-candidate cost of ``lag_bias * log2(lag /
    lag_min)``. Sampled NCCF peaks of wideband signals are only ~2 samples
    wide, so interpolated peak heights at the true period and its multiples
    differ by estimation noise; the bias resolves that family of near-ties
    toward the shorter period without overriding genuinely stronger peaks.
    """

    f0_min_hz: float = 60.0
    f0_max_hz: float = 800.0
    step_ms: float = 10.0
    corr_window_ms: float = 25.0
    voicing_threshold: float = 0.3
    octave_cost: float = 0.2
    transition_cost: float = 0.1
    lag_bias: float = 0.02

    def __post_init__(self) -> None:
        if not 0.0 < self.f0_min_hz < self.f0_max_hz:
            raise ValueError("need 0 < f0_min_hz < f0_max_hz")
        if not 0.0 < self.voicing_threshold < 1.0:
            raise ValueError("voicing_threshold must lie in (0, 1)")
        if self.step_ms <= 0 or self.corr_window_ms <= 0:
            raise ValueError("step_ms and corr_window_ms must be positive")
        if self.octave_cost < 0 or self.transition_cost < 0 or self.lag_bias < 0:
            raise ValueError("path costs must be non-negative")


@dataclass
class PitchTrack:
    """Per-frame F0 with voicing decisions; f0_hz is 0 exactly when unvoiced."""

    frame_times_s: np.ndarray
    f0_hz: np.ndarray
    voicing: np.ndarray
    params: PitchParams | None = None

    def __post_init__(self) -> None:
        self.frame_times_s = np.asarray(self.frame_times_s, dtype=np.float64)
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64)
        self.voicing = np.asarray(self.voicing, dtype=bool)
        if not (self.frame_times_s.size == self.f0_hz.size == self.voicing.size):
            raise ValueError("times, f0, and voicing must align")
        if np.any((self.f0_hz > 0) != self.voicing):
            raise ValueError("f0_hz must be positive exactly on voiced frames")

    @property
    def n_frames(self) -> int:
        return self.f0_hz.size

    def voiced_f0(self) -> np.ndarray:
        return self.f0_hz[self.voicing]


@dataclass
class SemitoneTrack:
    """Semitone values for the voiced frames of a track.

    ``semitones[i] = 12 * log2(f0[i] / base_hz)``; times are kept so targets
    can be re-aligned with feature frames later.
    """

    frame_times_s: np.ndarray
    semitones: np.ndarray
    base_hz: float

    def __post_init__(self) -> None:
        self.frame_times_s = np.asarray(self.frame_times_s, dtype=np.float64)
        self.semitones = np.asarray(self.semitones, dtype=np.float64)
        if self.frame_times_s.size != self.semitones.size:
            raise ValueError("times and semitones must align")


def _nccf_frame(padded: np.ndarray, prefix: np.ndarray, start: int, window: int,
                lags: np.ndarray) -> np.ndarray:
    """NCCF of one frame against itself shifted by each lag."""
    frame = padded[start : start + window]
    segment = padded[start : start + window + lags[-1]]
    numer = np.correlate(segment, frame, "valid")[lags[0] :]
    e_frame = prefix[start + window] - prefix[start]
    e_shift = prefix[start + lags + window] - prefix[start + lags]
    return numer / np.maximum(np.sqrt(e_frame * e_shift), _TINY)


def _peak_candidates(nccf: np.ndarray, lags: np.ndarray, threshold: float):
    """Local NCCF maxima above threshold, with parabolic lag refinement.

    Returns (lag, value) arrays sorted by ascending lag so that exact path-cost
    ties resolve toward the shorter period.
    """
    interior = (nccf[1:-1] > nccf[:-2]) & (nccf[1:-1] >= nccf[2:])
    peaks = np.nonzero(interior)[0] + 1
    peaks = peaks[nccf[peaks] > threshold]
    if peaks.size == 0:
        return np.empty(0), np.empty(0)
    if peaks.size > _MAX_CANDIDATES:
        best = np.argsort(nccf[peaks])[::-1][:_MAX_CANDIDATES]
        peaks = np.sort(peaks[best])

    cand_lags = np.empty(peaks.size)
    cand_vals = np.empty(peaks.size)
    for n, k in enumerate(peaks):
        y0, y1, y2 = nccf[k - 1 : k + 2]
        denom = y0 - 2.0 * y1 + y2
        shift = 0.0 if denom == 0 else np.clip(0.5 * (y0 - y2) / denom, -0.5, 0.5)
        cand_lags[n] = lags[k] + shift
        cand_vals[n] = min(1.0, y1 - 0.25 * (y0 - y2) * shift)
    return cand_lags, cand_vals


def _viterbi(candidates, params: PitchParams, lag_min: int) -> list[int]:
    """Minimum-cost state sequence; state -1 is unvoiced, else candidate index.

    Local cost is 1 - NCCF plus the lag bias for a candidate, and
    1 - voicing_threshold for the unvoiced state, so a frame prefers unvoiced
    exactly when no candidate beats the threshold on its own.
    """
    unvoiced_local = 1.0 - params.voicing_threshold
    n = len(candidates)
    costs: list[np.ndarray] = []
    back: list[np.ndarray] = []

    def local_cost(lags: np.ndarray, vals: np.ndarray) -> np.ndarray:
        return (1.0 - vals) + params.lag_bias * np.log2(lags / lag_min)

    first_lags, first_vals = candidates[0]
    costs.append(np.append(local_cost(first_lags, first_vals), unvoiced_local))
    back.append(np.full(first_lags.size + 1, -1, dtype=np.int64))

    for t in range(1, n):
        lags, vals = candidates[t]
        prev_lags = candidates[t - 1][0]
        prev = costs[-1]
        n_prev = prev_lags.size
        n_cur = lags.size

        cur = np.empty(n_cur + 1)
        ptr = np.empty(n_cur + 1, dtype=np.int64)
        if n_cur:
            # voiced -> voiced: octave cost on the log-lag jump
            if n_prev:
                jump = params.octave_cost * np.abs(
                    np.log2(lags[None, :] / prev_lags[:, None])
                )
                via_voiced = prev[:n_prev, None] + jump
                best_prev = np.argmin(via_voiced, axis=0)
                best_cost = via_voiced[best_prev, np.arange(n_cur)]
            else:
                best_prev = np.zeros(n_cur, dtype=np.int64)
                best_cost = np.full(n_cur, np.inf)
            via_unvoiced = prev[n_prev] + params.transition_cost
            take_unvoiced = via_unvoiced < best_cost
            cur[:n_cur] = local_cost(lags, vals) + np.where(
                take_unvoiced, via_unvoiced, best_cost
            )
            ptr[:n_cur] = np.where(take_unvoiced, n_prev, best_prev)
        # unvoiced state
        stay = prev[n_prev]
        if n_prev:
            switch_from = int(np.argmin(prev[:n_prev]))
            switch = prev[switch_from] + params.transition_cost
        else:
            switch = np.inf
            switch_from = 0
        if switch < stay:
            cur[n_cur] = unvoiced_local + switch
            ptr[n_cur] = switch_from
        else:
            cur[n_cur] = unvoiced_local + stay
            ptr[n_cur] = n_prev
        costs.append(cur)
        back.append(ptr)

    path = [int(np.argmin(costs[-1]))]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t][path[-1]]))
    path.reverse()
    return [
        state if state < candidates[t][0].size else -1
        for t, state in enumerate(path)
    ]


def track_f0(buf: AudioBuffer, params: PitchParams | None = None) -> PitchTrack:
    """Track F0 over ``buf``.

    Parameters
    ----------
    buf:
        Input audio; sample rate must be at least twice ``f0_max_hz``.
    params:
        Search range and path costs; defaults cover 60-800 Hz at 10 ms steps.

    Returns
    -------
    PitchTrack
        One frame per ``step_ms``; unvoiced frames carry ``f0_hz == 0``.
    """
    params = params or PitchParams()
    rate = buf.sample_rate_hz
    if rate < 2.0 * params.f0_max_hz:
        raise RateTooLow(
            f"sample rate {rate} cannot resolve f0_max {params.f0_max_hz} Hz"
        )

    window = int(round(params.corr_window_ms * rate / 1000.0))
    step = int(round(params.step_ms * rate / 1000.0))
    lag_min = max(1, int(rate // params.f0_max_hz))
    lag_max = int(math.ceil(rate / params.f0_min_hz))

    if buf.samples.size < window:
        empty = np.zeros(0)
        return PitchTrack(empty, empty, np.zeros(0, dtype=bool), params)

    n_frames = (buf.samples.size - window) // step + 1
    padded = np.concatenate([buf.samples, np.zeros(lag_max + 1)])
    prefix = np.concatenate([[0.0], np.cumsum(padded * padded)])
    lags = np.arange(lag_min, lag_max + 1)

    candidates = []
    for i in range(n_frames):
        nccf = _nccf_frame(padded, prefix, i * step, window, lags)
        candidates.append(_peak_candidates(nccf, lags, params.voicing_threshold))

    states = _viterbi(candidates, params, lag_min)
    f0 = np.zeros(n_frames)
    for t, state in enumerate(states):
        if state >= 0:
            f0[t] = np.clip(
                rate / candidates[t][0][state], params.f0_min_hz, params.f0_max_hz
            )
    times = (window / 2.0 + np.arange(n_frames) * step) / rate
    return PitchTrack(times, f0, f0 > 0, params)


def percentile(values, p: float) -> float:
    """Percentile with linear interpolation between order statistics."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInput("percentile of empty input")
    if not 0.0 <= p <= 100.0:
        raise ValueError("p must lie in [0, 100]")
    return float(np.percentile(values, p))


def hz_to_semitones(track: PitchTrack, base_hz: float) -> SemitoneTrack:
    """Convert the voiced frames of ``track`` to semitones re ``base_hz``."""
    if base_hz <= 0:
        raise NonPositiveBase(f"base_hz must be positive, got {base_hz}")
    voiced = track.voicing
    semitones = 12.0 * np.log2(track.f0_hz[voiced] / base_hz)
    return SemitoneTrack(track.frame_times_s[voiced], semitones, float(base_hz))


def semitones_to_hz(semitones, base_hz: float):
    """Inverse transform: f0 = base * 2^(st/12)."""
    if base_hz <= 0:
        raise NonPositiveBase(f"base_hz must be positive, got {base_hz}")
    return base_hz * np.exp2(np.asarray(semitones, dtype=np.float64) / 12.0)


def write_track_csv(path: str | Path, track: PitchTrack) -> None:
    """Write ``time_s,f0_hz,voiced`` rows; f0_hz is 0 on unvoiced frames."""
    lines = ["time_s,f0_hz,voiced"]
    for t, f0, v in zip(track.frame_times_s, track.f0_hz, track.voicing):
        lines.append(f"{fmt_float(t)},{fmt_float(f0)},{1 if v else 0}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_track_csv(path: str | Path) -> PitchTrack:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["time_s", "f0_hz", "voiced"]:
        raise ValueError(f"{path}: not a pitch-track CSV")
    times = np.array([float(r[0]) for r in rows[1:]])
    f0 = np.array([float(r[1]) for r in rows[1:]])
    voiced = np.array([r[2] == "1" for r in rows[1:]])
    return PitchTrack(times, f0, voiced)
