"""Metric oracles and experiment-protocol behavior."""
import numpy as np
import pytest
import scipy.stats

from pitchcov.dsp import FrameSpec, MfccMatrix
from pitchcov.errors import (
    ConstantInput,
    EmptyCorpus,
    EmptyInput,
    LengthMismatch,
    TooFewSamples,
)
from pitchcov.evaluation import (
    Corpus,
    Utterance,
    _split_sizes,
    ablation,
    corpus_base_hz,
    cross_matrix,
    load_corpus,
    pearson,
    per_coefficient_correlation,
    rmse,
    run_experiment,
)
from pitchcov.pitch import PitchTrack, SemitoneTrack

from conftest import planted_linear_corpus


# ---------------------------------------------------------------------------
# rmse
# ---------------------------------------------------------------------------

def test_rmse_examples():
    assert rmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert rmse([5.0, 7.0], [7.0, 9.0]) == pytest.approx(2.0)
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5))


def test_rmse_errors():
    with pytest.raises(EmptyInput):
        rmse([], [])
    with pytest.raises(LengthMismatch):
        rmse([1.0], [1.0, 2.0])


def test_rmse_triangle_inequality():
    rng = np.random.default_rng(18)
    for _ in range(25):
        a, b, c = rng.normal(size=(3, 30))
        assert rmse(a, c) <= rmse(a, b) + rmse(b, c) + 1e-12


# ---------------------------------------------------------------------------
# pearson
# ---------------------------------------------------------------------------

def test_pearson_perfect_correlation():
    x = np.arange(10.0)
    r, p = pearson(x, x)
    assert r == pytest.approx(1.0)
    assert p == pytest.approx(0.0, abs=1e-30)


def test_pearson_affine_anticorrelation():
    x = np.arange(10.0)
    r, _ = pearson(x, -2.0 * x + 3.0)
    assert r == pytest.approx(-1.0)


def test_pearson_errors():
    with pytest.raises(TooFewSamples):
        pearson([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ConstantInput):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_pearson_matches_scipy():
    rng = np.random.default_rng(19)
    for n in (5, 30, 1000):
        x = rng.normal(size=n)
        y = rng.normal(size=n) + 0.3 * x
        r, p = pearson(x, y)
        ref = scipy.stats.pearsonr(x, y)
        assert r == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-15)


def test_pearson_affine_invariance():
    rng = np.random.default_rng(20)
    x = rng.normal(size=50)
    y = rng.normal(size=50)
    r0, _ = pearson(x, y)
    r1, _ = pearson(2.5 * x + 1.0, y)
    r2, _ = pearson(-3.0 * x, y)
    assert r1 == pytest.approx(r0, abs=1e-12)
    assert r2 == pytest.approx(-r0, abs=1e-12)


def test_pearson_null_calibration():
    rng = np.random.default_rng(21)
    p_values = []
    for _ in range(100):
        x = rng.standard_normal(10_000)
        y = rng.standard_normal(10_000)
        r, p = pearson(x, y)
        assert abs(r) < 0.05
        p_values.append(p)
    p_values = np.array(p_values)
    assert 0.35 < np.mean(p_values) < 0.65
    assert 0.30 < np.mean(p_values <= 0.5) < 0.70


# ---------------------------------------------------------------------------
# per-coefficient correlations
# ---------------------------------------------------------------------------

def _single_utterance_corpus(features, semitones):
    n = features.shape[0]
    times = (280 + np.arange(n) * 160) / 16000
    f0 = 100.0 * np.exp2(semitones / 12.0)
    utt = Utterance(
        "u0",
        MfccMatrix(features, times, FrameSpec()),
        PitchTrack(times, f0, np.ones(n, dtype=bool)),
    )
    return Corpus("c0", [utt])


def test_per_coefficient_planted_column():
    rng = np.random.default_rng(22)
    features = rng.normal(size=(200, 40))
    semitones = features[:, 7].copy()
    st = SemitoneTrack((280 + np.arange(200) * 160) / 16000, semitones, 100.0)
    m = MfccMatrix(features, st.frame_times_s, FrameSpec())
    result = per_coefficient_correlation(m, st)
    assert result.r[7] == pytest.approx(1.0, abs=1e-9)
    assert result.p[7] == pytest.approx(0.0, abs=1e-30)
    assert not result.constant.any()


def test_per_coefficient_constant_column_flagged():
    rng = np.random.default_rng(23)
    features = rng.normal(size=(50, 5))
    features[:, 2] = 1.25
    st = SemitoneTrack((280 + np.arange(50) * 160) / 16000,
                       rng.normal(size=50), 100.0)
    m = MfccMatrix(features, st.frame_times_s, FrameSpec())
    result = per_coefficient_correlation(m, st)
    assert result.constant[2]
    assert np.isnan(result.r[2])
    assert np.isfinite(result.r[[0, 1, 3, 4]]).all()


# ---------------------------------------------------------------------------
# experiment protocols
# ---------------------------------------------------------------------------

def test_split_sizes():
    assert _split_sizes(60, 0.8) == 48
    assert _split_sizes(10, 0.8) == 8
    assert _split_sizes(2, 0.8) == 1
    with pytest.raises(EmptyCorpus):
        _split_sizes(1, 0.8)


def test_self_experiment_on_planted_corpus():
    w = np.random.default_rng(24).normal(size=40) * 0.25
    corpus = planted_linear_corpus("lin", w, seed=100)
    report, records, traces = run_experiment(corpus, corpus, runs=10, seed=4)
    assert report.rmse_semitones < 1e-6
    assert report.pearson_r > 0.999999
    assert len(records) == 10
    assert report.base_hz_train == report.base_hz_test
    # 8 utterances split 0.8 -> 6 train / 2 test -> 240 test frames
    assert all(rec.n == 240 for rec in records)
    assert traces and all(len(v) == 3 for v in traces.values())


def test_experiment_deterministic():
    w = np.random.default_rng(25).normal(size=40) * 0.25
    corpus = planted_linear_corpus("lin", w, seed=101)
    a = run_experiment(corpus, corpus, runs=3, seed=9)[1]
    b = run_experiment(corpus, corpus, runs=3, seed=9)[1]
    assert a == b


def test_cross_experiment_uses_full_corpora():
    w = np.random.default_rng(26).normal(size=40) * 0.25
    train = planted_linear_corpus("a", w, seed=102, n_utts=4)
    test = planted_linear_corpus("b", w, seed=103, n_utts=6)
    report, records, _ = run_experiment(train, test, runs=2, seed=1)
    assert all(rec.n == 6 * 120 for rec in records)  # full test corpus
    assert records[0].rmse == records[1].rmse  # no resampling across runs
    assert report.pearson_r > 0.999
    assert report.base_hz_train != report.base_hz_test


def test_empty_corpus_rejected():
    with pytest.raises(EmptyCorpus):
        run_experiment(Corpus("x", []), Corpus("x", []), runs=1)


def test_cross_matrix_protocols_and_labels():
    w = np.random.default_rng(27).normal(size=40) * 0.25
    conditions = [
        planted_linear_corpus(f"c{k}", w, seed=110 + k, n_utts=4) for k in range(3)
    ]
    matrix, records = cross_matrix(conditions, runs=2, seed=2)
    assert matrix.conditions == ["c0", "c1", "c2"]
    assert matrix.mean_r.shape == (3, 3)
    assert len(records) == 3 * 3 * 2
    assert matrix.significant.all()
    assert matrix.mean_r.min() > 0.999
    # diagonal cells split; off-diagonal cells use the full test corpus
    diag = [r for r in records if r.train_id == r.test_id]
    off = [r for r in records if r.train_id != r.test_id]
    assert all(r.n == 120 for r in diag)  # 4 utts -> 1 test utt
    assert all(r.n == 480 for r in off)


def test_cross_matrix_symmetry_for_identical_conditions():
    w = np.random.default_rng(28).normal(size=40) * 0.25
    base = planted_linear_corpus("same", w, seed=120, n_utts=4)
    conditions = []
    for k in range(4):
        c = Corpus(f"cond{k}", base.utterances)
        conditions.append(c)
    matrix, _ = cross_matrix(conditions, runs=2, seed=5)
    for i in range(4):
        for j in range(4):
            assert abs(matrix.mean_r[i, j] - matrix.mean_r[j, i]) < 0.05


def test_noise_targets_not_significant():
    w = np.random.default_rng(29).normal(size=40)
    conditions = [
        planted_linear_corpus(f"n{k}", w, seed=130 + k, noise_targets=True)
        for k in range(3)
    ]
    matrix, _ = cross_matrix(conditions, runs=5, seed=6)
    assert (~matrix.significant).sum() >= 7  # out of 9 cells


# ---------------------------------------------------------------------------
# ablation
# ---------------------------------------------------------------------------

def test_ablation_planted_corpus_flat():
    w = np.random.default_rng(30).normal(size=40) * 0.25
    corpus = planted_linear_corpus("lin", w, seed=140)
    points = ablation(corpus, fractions=[0.1, 0.5, 1.0], runs=3, seed=3)
    assert [p.fraction for p in points] == [0.1, 0.5, 1.0]
    for p in points:
        assert p.rmse < 1e-6  # >= 41 training frames at every fraction
        assert p.pearson_r > 0.999999


def test_ablation_full_fraction_matches_run_experiment():
    w = np.random.default_rng(31).normal(size=40) * 0.25
    corpus = planted_linear_corpus("lin", w, seed=141)
    report, _, _ = run_experiment(corpus, corpus, runs=4, seed=8)
    points = ablation(corpus, fractions=[1.0], runs=4, seed=8)
    assert points[0].rmse == report.rmse_semitones
    assert points[0].pearson_r == report.pearson_r


def test_ablation_rejects_bad_fraction():
    w = np.random.default_rng(32).normal(size=4)
    corpus = planted_linear_corpus("lin", w, seed=142, n_frames=30)
    with pytest.raises(ValueError):
        ablation(corpus, fractions=[0.0], runs=1)


# ---------------------------------------------------------------------------
# corpus loading
# ---------------------------------------------------------------------------

def test_corpus_base_is_low_percentile():
    w = np.zeros(40)
    corpus = planted_linear_corpus("lin", w, seed=143, n_utts=2)
    base = corpus_base_hz(corpus)
    f0 = corpus.voiced_f0()
    assert np.quantile(f0, 0.04) <= base <= np.quantile(f0, 0.06)


def test_load_corpus_missing(tmp_path):
    with pytest.raises(EmptyCorpus):
        load_corpus(tmp_path)
