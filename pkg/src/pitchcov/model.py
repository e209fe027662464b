"""Feature assembly, target alignment, and ordinary least squares.

The predictor is deliberately minimal: an unregularized linear map from
(optionally context-stacked) cepstral coefficients to semitones, fit through
a QR factorization of the bias-augmented design matrix.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from ._util import atomic_write_text, fmt_float
from .dsp import MfccMatrix
from .errors import DimensionMismatch, NoVoicedFrames, TooFewSamples
from .pitch import SemitoneTrack


@dataclass
class Provenance:
    """Where each dataset row came from: (utterance id, feature-frame index)."""

    corpus_id: str = ""
    utterance_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=object))
    frame_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


@dataclass
class Dataset:
    features: np.ndarray  # (N, D)
    targets: np.ndarray  # (N,)
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] != self.targets.size:
            raise ValueError("features and targets must align row-wise")
        if self.features.size and not np.isfinite(self.features).all():
            raise ValueError("features must be finite")
        if self.targets.size and not np.isfinite(self.targets).all():
            raise ValueError("targets must be finite")

    def __len__(self) -> int:
        return self.targets.size


@dataclass
class RegressionModel:
    weights: np.ndarray
    intercept: float
    context_k: int = 0
    rank_deficient: bool = False

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)

    @property
    def feature_dim(self) -> int:
        return self.weights.size


def assemble_features(mfcc: MfccMatrix, context_k: int = 0) -> np.ndarray:
    """Stack each frame with its k neighbors on both sides.

    Row i concatenates frames i-k..i+k (dimension grows to n_mfcc*(2k+1));
    edge frames replicate the nearest frame so the row count never changes.
    ``context_k=0`` returns the coefficients unchanged.
    """
    if context_k < 0:
        raise ValueError("context_k must be non-negative")
    coeffs = mfcc.coeffs
    if context_k == 0:
        return coeffs.copy()
    n = coeffs.shape[0]
    idx = np.arange(n)
    columns = [
        coeffs[np.clip(idx + delta, 0, n - 1)]
        for delta in range(-context_k, context_k + 1)
    ]
    return np.hstack(columns)


def align_targets(mfcc: MfccMatrix, st: SemitoneTrack,
                  features: np.ndarray | None = None,
                  corpus_id: str = "", utterance_id: str = "") -> Dataset:
    """Pair feature frames with semitone targets by nearest frame time.

    A pair forms when the nearest voiced pitch frame lies within half a
    feature step; ties go to the earlier pitch frame. Frames without a voiced
    partner are dropped. Raises :class:`NoVoicedFrames` when nothing pairs.
    """
    if features is None:
        features = mfcc.coeffs
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != mfcc.n_frames:
        raise DimensionMismatch("features must have one row per feature frame")
    if st.semitones.size == 0:
        raise NoVoicedFrames("semitone track has no voiced frames")

    tolerance = mfcc.spec.step_ms / 1000.0 / 2.0 + 1e-9
    times = mfcc.frame_times_s
    right = np.searchsorted(st.frame_times_s, times)
    left = np.clip(right - 1, 0, st.semitones.size - 1)
    right = np.clip(right, 0, st.semitones.size - 1)
    d_left = np.abs(times - st.frame_times_s[left])
    d_right = np.abs(st.frame_times_s[right] - times)
    nearest = np.where(d_left <= d_right, left, right)
    distance = np.minimum(d_left, d_right)

    keep = distance <= tolerance
    if not keep.any():
        raise NoVoicedFrames("no feature frame has a voiced partner in range")
    frame_idx = np.nonzero(keep)[0]
    return Dataset(
        features[frame_idx],
        st.semitones[nearest[keep]],
        Provenance(
            corpus_id,
            np.array([utterance_id] * frame_idx.size, dtype=object),
            frame_idx,
        ),
    )


def concat_datasets(datasets: list[Dataset]) -> Dataset:
    """Pool several utterance datasets into one design matrix."""
    if not datasets:
        raise ValueError("nothing to concatenate")
    return Dataset(
        np.vstack([d.features for d in datasets]),
        np.concatenate([d.targets for d in datasets]),
        Provenance(
            datasets[0].provenance.corpus_id,
            np.concatenate([d.provenance.utterance_ids for d in datasets]),
            np.concatenate([d.provenance.frame_indices for d in datasets]),
        ),
    )


def fit_ols(data: Dataset, context_k: int = 0) -> RegressionModel:
    """Least-squares fit of targets on features with an unpenalized intercept.

    Solves via Householder QR of the bias-augmented design matrix. If the
    design is rank-deficient the minimum-norm solution is returned instead
    (column-pivoted QR) and the model is flagged.
    """
    n, d = data.features.shape
    if n < d + 1:
        raise TooFewSamples(f"{n} rows cannot determine {d + 1} coefficients")
    design = np.column_stack([data.features, np.ones(n)])

    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    rank_deficient = diag.min() <= diag.max() * max(design.shape) * np.finfo(float).eps
    if rank_deficient:
        coef = scipy.linalg.lstsq(design, data.targets, lapack_driver="gelsy")[0]
    else:
        coef = scipy.linalg.solve_triangular(r, q.T @ data.targets)
    return RegressionModel(coef[:-1], float(coef[-1]), context_k, rank_deficient)


def predict(model: RegressionModel, features: np.ndarray) -> np.ndarray:
    """Apply the linear map: y = X @ w + b."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.feature_dim:
        raise DimensionMismatch(
            f"expected {model.feature_dim} feature columns, "
            f"got {features.shape[1] if features.ndim == 2 else 'non-2D input'}"
        )
    return features @ model.weights + model.intercept


def write_model_csv(path: str | Path, model: RegressionModel) -> None:
    """Two-row serialization: metadata, then the weight vector."""
    lines = [
        "context_k,feature_dim,intercept,rank_flag",
        ",".join([
            str(model.context_k),
            str(model.feature_dim),
            fmt_float(model.intercept),
            "1" if model.rank_deficient else "0",
        ]),
        ",".join(fmt_float(w) for w in model.weights),
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_model_csv(path: str | Path) -> RegressionModel:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) != 3 or rows[0] != ["context_k", "feature_dim", "intercept", "rank_flag"]:
        raise ValueError(f"{path}: not a model CSV")
    context_k, feature_dim, intercept, rank_flag = rows[1]
    weights = np.array([float(w) for w in rows[2]])
    if weights.size != int(feature_dim):
        raise ValueError(f"{path}: weight count disagrees with feature_dim")
    return RegressionModel(weights, float(intercept), int(context_k), rank_flag == "1")
