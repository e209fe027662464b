"""Metrics and experiment protocols.

Provides RMSE and Pearson correlation with exact Student-t significance, the
repeated-holdout experiment (utterance-level 80/20 splits averaged over
runs), pairwise cross-condition matrices, training-size ablations, and
per-coefficient correlation profiles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import betainc

from ._util import natural_key, rng_for
from .dsp import MfccMatrix, read_mfcc_csv
from .errors import (
    ConstantInput,
    EmptyCorpus,
    EmptyInput,
    LengthMismatch,
    TooFewSamples,
)
from .model import Dataset, align_targets, assemble_features, concat_datasets, fit_ols, predict
from .pitch import PitchTrack, hz_to_semitones, percentile, read_track_csv

BASE_PERCENTILE = 5.0
SIGNIFICANCE_LEVEL = 0.05


@dataclass
class Utterance:
    utt_id: str
    mfcc: MfccMatrix
    track: PitchTrack


@dataclass
class Corpus:
    """One experimental condition: a bag of analyzed utterances."""

    condition_id: str
    utterances: list[Utterance]

    def __len__(self) -> int:
        return len(self.utterances)

    def voiced_f0(self) -> np.ndarray:
        parts = [u.track.voiced_f0() for u in self.utterances]
        return np.concatenate(parts) if parts else np.empty(0)


@dataclass
class EvalReport:
    """Aggregated result of one train/test experiment (means over runs)."""

    rmse_semitones: float
    pearson_r: float
    p_value: float  # worst (largest) run p-value
    n_frames: int
    base_hz_train: float
    base_hz_test: float


@dataclass
class RunRecord:
    """One run of one train/test cell, as written to experiments.csv."""

    train_id: str
    test_id: str
    run: int
    rmse: float
    r: float
    p: float
    n: int
    base_train: float
    base_test: float
    train_rmse: float


@dataclass
class CrossMatrix:
    conditions: list[str]
    mean_r: np.ndarray  # (n, n); rows = training condition
    significant: np.ndarray  # (n, n) bool; every run's p <= 0.05
    runs: int


@dataclass
class AblationPoint:
    fraction: float
    rmse: float
    pearson_r: float


@dataclass
class CoefficientCorrelations:
    """Per-dimension correlation against semitone targets."""

    r: np.ndarray
    p: np.ndarray
    constant: np.ndarray  # True where the coefficient never moved


def rmse(gold, pred) -> float:
    """Root-mean-square difference of two equal-length vectors."""
    gold = np.asarray(gold, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if gold.size == 0:
        raise EmptyInput("rmse of empty input")
    if gold.shape != pred.shape:
        raise LengthMismatch(f"length {gold.shape} vs {pred.shape}")
    return float(np.sqrt(np.mean((gold - pred) ** 2)))


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation with a two-sided exact Student-t p-value.

    The statistic t = r*sqrt((n-2)/(1-r^2)) is referred to a t distribution
    with n-2 degrees of freedom, evaluated through the regularized incomplete
    beta function.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch(f"length {x.shape} vs {y.shape}")
    n = x.size
    if n < 3:
        raise TooFewSamples("correlation needs at least 3 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.sum(dx * dx))
    sy = np.sqrt(np.sum(dy * dy))
    if sx == 0 or sy == 0:
        raise ConstantInput("correlation undefined for constant input")
    r = float(np.clip(np.sum(dx * dy) / (sx * sy), -1.0, 1.0))
    df = n - 2
    if 1.0 - r * r <= 0.0:
        return r, 0.0
    t2 = r * r * df / (1.0 - r * r)
    p = float(betainc(df / 2.0, 0.5, df / (df + t2)))
    return r, p


def per_coefficient_correlation(mfcc: MfccMatrix, st) -> CoefficientCorrelations:
    """Correlate every cepstral dimension of one utterance with its targets."""
    data = align_targets(mfcc, st)
    return _column_correlations(data.features, data.targets)


def corpus_coefficient_correlations(corpus: Corpus) -> CoefficientCorrelations:
    """Per-dimension correlations over all aligned frames of a condition."""
    base = corpus_base_hz(corpus)
    data = concat_datasets(_utterance_datasets(corpus, base, context_k=0))
    return _column_correlations(data.features, data.targets)


def _column_correlations(features: np.ndarray, targets: np.ndarray) -> CoefficientCorrelations:
    n_dim = features.shape[1]
    r = np.full(n_dim, np.nan)
    p = np.full(n_dim, np.nan)
    constant = np.zeros(n_dim, dtype=bool)
    for j in range(n_dim):
        try:
            r[j], p[j] = pearson(features[:, j], targets)
        except ConstantInput:
            constant[j] = True
    return CoefficientCorrelations(r, p, constant)


def corpus_base_hz(corpus: Corpus, pct: float = BASE_PERCENTILE) -> float:
    """Semitone reference: low percentile of all voiced F0 in the condition."""
    voiced = corpus.voiced_f0()
    if voiced.size == 0:
        raise EmptyCorpus(f"{corpus.condition_id}: no voiced frames")
    return percentile(voiced, pct)


def _utterance_datasets(corpus: Corpus, base_hz: float, context_k: int) -> list[Dataset]:
    datasets = []
    for utt in corpus.utterances:
        st = hz_to_semitones(utt.track, base_hz)
        features = assemble_features(utt.mfcc, context_k)
        datasets.append(
            align_targets(utt.mfcc, st, features, corpus.condition_id, utt.utt_id)
        )
    return datasets


def _split_sizes(n: int, split: float) -> int:
    """Training-set size for an n-utterance corpus; both sides stay non-empty."""
    if n < 2:
        raise EmptyCorpus("self-evaluation needs at least 2 utterances")
    return min(max(int(round(split * n)), 1), n - 1)


def run_experiment(train: Corpus, test: Corpus, split: float = 0.8,
                   runs: int = 10, seed: int = 0, context_k: int = 0):
    """Repeated-holdout evaluation of OLS from features to semitones.

    When ``train`` and ``test`` are the same corpus object, each run splits
    the utterances ``split``/(1-``split``) and fits on one side; otherwise
    every run trains on the full source condition and tests on the full
    target condition. Semitone bases are computed per condition over all of
    its voiced frames, and both are recorded.

    Returns
    -------
    (EvalReport, list[RunRecord], traces)
        ``traces`` maps test utterance ids of the first run to
        ``(times, gold, pred)`` arrays for figure reproduction.
    """
    if len(train) == 0 or len(test) == 0:
        raise EmptyCorpus("cannot evaluate an empty corpus")
    self_case = train is test

    base_train = corpus_base_hz(train)
    base_test = base_train if self_case else corpus_base_hz(test)
    train_sets = _utterance_datasets(train, base_train, context_k)
    test_sets = train_sets if self_case else _utterance_datasets(test, base_test, context_k)

    records: list[RunRecord] = []
    traces: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for run in range(runs):
        if self_case:
            rng = rng_for(seed, train.condition_id, test.condition_id, run)
            order = rng.permutation(len(train))
            n_train = _split_sizes(len(train), split)
            train_idx, test_idx = order[:n_train], order[n_train:]
        else:
            train_idx = np.arange(len(train))
            test_idx = np.arange(len(test))

        fit_data = concat_datasets([train_sets[i] for i in train_idx])
        model = fit_ols(fit_data, context_k)
        eval_sets = [test_sets[i] for i in test_idx]
        eval_data = concat_datasets(eval_sets)
        pred = predict(model, eval_data.features)
        r, p = pearson(eval_data.targets, pred)
        records.append(RunRecord(
            train.condition_id, test.condition_id, run,
            rmse(eval_data.targets, pred), r, p, len(eval_data),
            base_train, base_test,
            rmse(fit_data.targets, predict(model, fit_data.features)),
        ))
        if run == 0:
            for i in test_idx:
                utt = test.utterances[i]
                data = test_sets[i]
                traces[utt.utt_id] = (
                    utt.mfcc.frame_times_s[data.provenance.frame_indices],
                    data.targets,
                    predict(model, data.features),
                )

    report = EvalReport(
        rmse_semitones=float(np.mean([rec.rmse for rec in records])),
        pearson_r=float(np.mean([rec.r for rec in records])),
        p_value=float(np.max([rec.p for rec in records])),
        n_frames=int(round(np.mean([rec.n for rec in records]))),
        base_hz_train=base_train,
        base_hz_test=base_test,
    )
    return report, records, traces


def cross_matrix(conditions: list[Corpus], runs: int = 10, seed: int = 0,
                 split: float = 0.8, context_k: int = 0):
    """Evaluate every ordered (train, test) pair of conditions.

    Diagonal cells use the self-split protocol; off-diagonal cells train on
    the whole source and test on the whole target. A cell counts as
    significant only if every run's p-value is at or below 0.05.

    Returns (CrossMatrix, list[RunRecord]).
    """
    if not conditions:
        raise EmptyCorpus("no conditions given")
    for c in conditions:
        if len(c) == 0:
            raise EmptyCorpus(f"{c.condition_id} is empty")

    n = len(conditions)
    mean_r = np.zeros((n, n))
    significant = np.zeros((n, n), dtype=bool)
    all_records: list[RunRecord] = []
    for i, train in enumerate(conditions):
        for j, test in enumerate(conditions):
            # i == j passes the same object twice, selecting the split protocol
            report, records, _ = run_experiment(
                train, test, split=split, runs=runs, seed=seed, context_k=context_k,
            )
            mean_r[i, j] = report.pearson_r
            significant[i, j] = all(rec.p <= SIGNIFICANCE_LEVEL for rec in records)
            all_records.extend(records)
    return CrossMatrix([c.condition_id for c in conditions], mean_r, significant, runs), all_records


def default_fractions() -> list[float]:
    return [round(0.1 * k, 1) for k in range(1, 11)]


def ablation(corpus: Corpus, fractions: list[float] | None = None,
             runs: int = 10, seed: int = 0, split: float = 0.8,
             context_k: int = 0) -> list[AblationPoint]:
    """Shrink the training data while testing on the fixed held-out split.

    Each run draws the same utterance permutation as :func:`run_experiment`
    would for this corpus and seed, holds out the test side, then refits on
    a nested subsample of the pooled training frames: ceil(fraction * N)
    frames per fraction, prefixes of one per-run shuffle. Fraction 1.0
    therefore reproduces the self-evaluation exactly, and smaller fractions
    shrink the amount of training data without shrinking its coverage of the
    training utterances.
    """
    if len(corpus) == 0:
        raise EmptyCorpus("cannot ablate an empty corpus")
    fractions = fractions if fractions is not None else default_fractions()
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError(f"fraction {f} outside (0, 1]")

    base = corpus_base_hz(corpus)
    sets = _utterance_datasets(corpus, base, context_k)
    sums = {f: (0.0, 0.0) for f in fractions}
    for run in range(runs):
        rng = rng_for(seed, corpus.condition_id, corpus.condition_id, run)
        order = rng.permutation(len(corpus))
        n_train = _split_sizes(len(corpus), split)
        train_idx, test_idx = order[:n_train], order[n_train:]
        eval_data = concat_datasets([sets[i] for i in test_idx])
        pool = concat_datasets([sets[i] for i in train_idx])
        frame_order = rng.permutation(len(pool))
        for f in fractions:
            n_sub = math.ceil(f * len(pool))
            if n_sub >= len(pool):  # bit-exact match with run_experiment at 1.0
                sub = pool
            else:
                subset = frame_order[:n_sub]
                sub = Dataset(pool.features[subset], pool.targets[subset])
            model = fit_ols(sub, context_k)
            pred = predict(model, eval_data.features)
            err = rmse(eval_data.targets, pred)
            r, _ = pearson(eval_data.targets, pred)
            s_err, s_r = sums[f]
            sums[f] = (s_err + err, s_r + r)
    return [
        AblationPoint(f, sums[f][0] / runs, sums[f][1] / runs) for f in fractions
    ]


def load_corpus(corpus_dir: str | Path, condition_id: str | None = None) -> Corpus:
    """Load extracted features (``<utt>.mfcc.csv`` + ``<utt>.f0.csv``)."""
    corpus_dir = Path(corpus_dir)
    mfcc_files = sorted(corpus_dir.glob("*.mfcc.csv"), key=lambda p: natural_key(p.name))
    utterances = []
    for mfcc_path in mfcc_files:
        utt_id = mfcc_path.name[: -len(".mfcc.csv")]
        track_path = corpus_dir / f"{utt_id}.f0.csv"
        if not track_path.exists():
            raise EmptyCorpus(f"{corpus_dir}: {utt_id} has features but no pitch track")
        utterances.append(
            Utterance(utt_id, read_mfcc_csv(mfcc_path), read_track_csv(track_path))
        )
    if not utterances:
        raise EmptyCorpus(f"{corpus_dir}: no extracted features (*.mfcc.csv) found")
    return Corpus(condition_id or corpus_dir.name, utterances)
