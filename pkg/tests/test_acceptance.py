"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -v -s tests/test_acceptance.py`` to see the per-criterion
lines; the corpus fixtures (60 five-second utterances per mechanism) are
built once per session.
"""
import time

import numpy as np
import pytest

from pitchcov.audio_io import AudioBuffer
from pitchcov.dsp import dct_basis, frame_signal, mfcc, power_spectrum
from pitchcov.evaluation import (
    ablation,
    corpus_coefficient_correlations,
    cross_matrix,
    run_experiment,
)
from pitchcov.model import Dataset, fit_ols, predict
from pitchcov.pitch import track_f0
from pitchcov.cli import main as cli_main

from conftest import planted_linear_corpus, sawtooth
from test_dsp import brute_force_dft


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"\n[criterion {num}] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} ({name}): {detail}"


_experiment_cache: dict = {}


def _self_experiment(corpus):
    if corpus.condition_id not in _experiment_cache:
        start = time.perf_counter()
        report, records, _ = run_experiment(corpus, corpus, split=0.8, runs=10, seed=7)
        _experiment_cache[corpus.condition_id] = (
            report, records, time.perf_counter() - start
        )
    return _experiment_cache[corpus.condition_id]


def test_criterion_1_sinusoidal_prediction(sine_corpus):
    corpus, _, build_s = sine_corpus
    report, _, eval_s = _self_experiment(corpus)
    elapsed = build_s + eval_s
    ok = (report.rmse_semitones <= 5.0 and report.pearson_r >= 0.90
          and elapsed <= 300.0)
    _report(1, "sinusoidal pitch prediction", ok,
            f"test rmse {report.rmse_semitones:.3f} st (<=5.0), "
            f"mean r {report.pearson_r:.4f} (>=0.90), "
            f"runtime {elapsed:.0f} s (<=300)")


def test_criterion_2_complicated_prediction(sine_corpus, complicated_corpus):
    sine, _, _ = sine_corpus
    comp, _, _ = complicated_corpus
    report_sine = _self_experiment(sine)[0]
    report_comp = _self_experiment(comp)[0]
    gap = abs(report_sine.rmse_semitones - report_comp.rmse_semitones)
    ok = (report_comp.rmse_semitones <= 5.0 and report_comp.pearson_r >= 0.85
          and gap <= 2.0)
    _report(2, "complicated pitch prediction", ok,
            f"test rmse {report_comp.rmse_semitones:.3f} st (<=5.0), "
            f"mean r {report_comp.pearson_r:.4f} (>=0.85), "
            f"|rmse_sine - rmse_complicated| {gap:.3f} st (<=2.0)")


def test_criterion_3_ablation_robustness(sine_corpus):
    corpus, _, _ = sine_corpus
    points = ablation(corpus, fractions=[0.1, 1.0], runs=10, seed=7)
    ratio = points[0].rmse / points[1].rmse
    ok = points[0].rmse <= 1.5 * points[1].rmse
    _report(3, "training-data ablation", ok,
            f"rmse@0.1 {points[0].rmse:.3f} vs rmse@1.0 {points[1].rmse:.3f}, "
            f"ratio {ratio:.2f} (<=1.5)")


def test_criterion_4_per_coefficient_correlations(sine_corpus, complicated_corpus):
    counts = {}
    for corpus, _, _ in (sine_corpus, complicated_corpus):
        result = corpus_coefficient_correlations(corpus)
        strong = (~result.constant) & (np.abs(result.r) > 0.3) & (result.p <= 0.05)
        counts[corpus.condition_id] = int(strong.sum())
    ok = all(v >= 5 for v in counts.values())
    _report(4, "per-coefficient correlations", ok,
            ", ".join(f"{k}: {v}/40 with |r|>0.3 & p<=0.05 (>=5)"
                      for k, v in counts.items()))


def test_criterion_5_dsp_oracles():
    rng = np.random.default_rng(40)
    checks = []

    x = rng.normal(size=1024)
    reference = np.abs(brute_force_dft(x)[:513]) ** 2
    fft_err = np.max(np.abs(power_spectrum(x, 1024) - reference)) / reference.max()
    checks.append(("fft vs dft", fft_err <= 1e-9, f"{fft_err:.2e}"))

    frame = np.zeros(1024)
    frame[:560] = rng.normal(size=560)
    power = power_spectrum(frame, 1024)
    full = power[0] + power[-1] + 2 * power[1:-1].sum()
    parseval_err = abs(full - 1024 * np.sum(frame**2)) / (1024 * np.sum(frame**2))
    checks.append(("parseval", parseval_err <= 1e-9, f"{parseval_err:.2e}"))

    basis = dct_basis(40)
    orth_err = np.max(np.abs(basis @ basis.T - np.eye(40)))
    checks.append(("dct orthonormal", orth_err <= 1e-12, f"{orth_err:.2e}"))

    gain = 2.0
    quiet = AudioBuffer(0.2 * sawtooth(220.0, 1.0), 16000)
    loud = AudioBuffer(quiet.samples * gain, 16000)
    a, b = mfcc(quiet).coeffs, mfcc(loud).coeffs
    c0_err = np.max(np.abs((b[:, 0] - a[:, 0]) - 2 * np.log(gain) * np.sqrt(40)))
    rest_err = np.max(np.abs(b[:, 1:] - a[:, 1:]))
    checks.append(("gain invariance", c0_err <= 1e-6 and rest_err <= 1e-6,
                   f"c0 {c0_err:.2e}, others {rest_err:.2e}"))

    n_frames = frame_signal(AudioBuffer(np.zeros(80000), 16000)).shape[0]
    checks.append(("frame count", n_frames == 497, f"{n_frames}"))

    ok = all(c[1] for c in checks)
    _report(5, "dsp oracle suite", ok,
            "; ".join(f"{name} {'ok' if good else 'BAD'} [{detail}]"
                      for name, good, detail in checks))


def test_criterion_6_tracker_oracles(sine_corpus, complicated_corpus):
    checks = []

    saw = track_f0(AudioBuffer(0.8 * sawtooth(220.0, 1.0), 16000))
    saw_err = abs(np.median(saw.voiced_f0()) - 220.0) / 220.0
    checks.append(("sawtooth 220", saw_err <= 0.01, f"{saw_err:.4f}"))

    t = np.arange(16000) / 16000
    sine_track = track_f0(AudioBuffer(0.8 * np.sin(2 * np.pi * 100 * t), 16000))
    sine_err = abs(np.median(sine_track.voiced_f0()) - 100.0) / 100.0
    checks.append(("sine 100", sine_err <= 0.01, f"{sine_err:.4f}"))

    octave_errors, voiced_total = 0, 0
    for corpus, specs, _ in (sine_corpus, complicated_corpus):
        for utt, spec in zip(corpus.utterances, specs):
            commanded = np.interp(utt.track.frame_times_s,
                                  spec.contour.times_s, spec.contour.f0_hz)
            voiced = utt.track.voicing
            err = 12 * np.abs(np.log2(utt.track.f0_hz[voiced] / commanded[voiced]))
            octave_errors += int((err > 6.0).sum())
            voiced_total += int(voiced.sum())
    octave_rate = octave_errors / voiced_total
    checks.append(("octave errors", octave_rate < 0.02,
                   f"{octave_errors}/{voiced_total} = {octave_rate:.5f}"))

    noise = np.random.default_rng(41).uniform(-1, 1, 16000)
    unvoiced_rate = float((~track_f0(AudioBuffer(noise, 16000)).voicing).mean())
    checks.append(("noise unvoiced", unvoiced_rate >= 0.80, f"{unvoiced_rate:.2f}"))

    ok = all(c[1] for c in checks)
    _report(6, "pitch tracker oracle suite", ok,
            "; ".join(f"{name} {'ok' if good else 'BAD'} [{detail}]"
                      for name, good, detail in checks))


def test_criterion_7_ols_oracles():
    rng = np.random.default_rng(42)
    checks = []

    w_true = rng.normal(size=40)
    features = rng.normal(size=(1000, 40))
    targets = features @ w_true + 0.5
    model = fit_ols(Dataset(features, targets))
    recovery = np.max(np.abs(model.weights - w_true))
    checks.append(("planted recovery", recovery <= 1e-8, f"{recovery:.2e}"))

    x = rng.normal(size=(500, 20))
    y = rng.normal(size=500)
    m2 = fit_ols(Dataset(x, y))
    grad = np.max(np.abs(x.T @ (y - predict(m2, x))))
    bound = 1e-6 * np.max(np.abs(x.T @ y))
    checks.append(("normal equations", grad <= bound, f"{grad:.2e} <= {bound:.2e}"))

    toy = fit_ols(Dataset(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
                          np.array([1.0, 2.0, 3.0])))
    toy_err = max(abs(toy.weights[0] - 1.0), abs(toy.weights[1] - 2.0),
                  abs(toy.intercept))
    checks.append(("hand-solved 3x2", toy_err <= 1e-10, f"{toy_err:.2e}"))

    ok = all(c[1] for c in checks)
    _report(7, "ols oracle suite", ok,
            "; ".join(f"{name} {'ok' if good else 'BAD'} [{detail}]"
                      for name, good, detail in checks))


def test_criterion_8_pipeline_determinism(tmp_path):
    out_dirs = []
    for root in (tmp_path / "run1", tmp_path / "run2"):
        corpus = root / "corpora" / "sine"
        assert cli_main(["synth", "--mechanism", "sinusoidal", "--n", "6",
                         "--duration", "2.0", "--seed", "7",
                         "--out", str(corpus)]) == 0
        assert cli_main(["extract", "--corpus", str(corpus)]) == 0
        out = root / "reports"
        assert cli_main(["eval", "--train", str(corpus), "--runs", "5",
                         "--seed", "7", "--ablation",
                         "--fractions", "0.5:1.0:0.5", "--percoeff",
                         "--out", str(out), "--no-figures"]) == 0
        out_dirs.append(out)
    names = sorted(p.name for p in out_dirs[0].iterdir() if p.name != "config.json")
    mismatched = [
        name for name in names
        if (out_dirs[0] / name).read_bytes() != (out_dirs[1] / name).read_bytes()
    ]
    ok = not mismatched and len(names) >= 4
    _report(8, "pipeline determinism", ok,
            f"{len(names)} report files byte-identical"
            + (f"; mismatched: {mismatched}" if mismatched else ""))


def test_criterion_9_cross_matrix_protocol():
    w = np.random.default_rng(43).normal(size=40) * 0.25
    linear = [planted_linear_corpus(f"lin{k}", w, seed=300 + k) for k in range(6)]
    matrix_lin, _ = cross_matrix(linear, runs=10, seed=9)
    lin_ok = bool(matrix_lin.mean_r.min() >= 0.999 and matrix_lin.significant.all())

    noise = [
        planted_linear_corpus(f"noise{k}", w, seed=400 + k, noise_targets=True)
        for k in range(6)
    ]
    matrix_noise, _ = cross_matrix(noise, runs=10, seed=9)
    n_nonsig = int((~matrix_noise.significant).sum())
    noise_ok = n_nonsig >= 30

    ok = lin_ok and noise_ok
    _report(9, "cross-matrix protocol", ok,
            f"planted-linear min r {matrix_lin.mean_r.min():.6f} (>=0.999), "
            f"all significant {bool(matrix_lin.significant.all())}; "
            f"noise non-significant {n_nonsig}/36 (>=30)")
