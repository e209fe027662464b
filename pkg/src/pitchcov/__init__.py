"""pitchcov: predicting voice pitch from coarse spectral features.

The pipeline: synthesize voiced stimuli with controlled F0 contours
(:mod:`pitchcov.synth`), extract single-frame cepstral features
(:mod:`pitchcov.dsp`) and gold F0 tracks (:mod:`pitchcov.pitch`), fit
ordinary least squares from features to semitone-scaled F0
(:mod:`pitchcov.model`), and evaluate with repeated holdout splits,
cross-condition matrices, and training-size ablations
(:mod:`pitchcov.evaluation`).
"""
from .audio_io import AudioBuffer, read_wav, resample, write_wav
from .dsp import FrameSpec, MfccMatrix, mfcc
from .evaluation import (
    Corpus,
    CrossMatrix,
    EvalReport,
    Utterance,
    ablation,
    cross_matrix,
    load_corpus,
    pearson,
    rmse,
    run_experiment,
)
from .model import Dataset, RegressionModel, assemble_features, align_targets, fit_ols, predict
from .pitch import PitchParams, PitchTrack, SemitoneTrack, hz_to_semitones, percentile, track_f0
from .synth import (
    F0Contour,
    StimulusSpec,
    complicated_contour,
    generate_corpus,
    glottal_source,
    sinusoidal_contour,
    vocal_tract_filter,
)

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "read_wav", "write_wav", "resample",
    "FrameSpec", "MfccMatrix", "mfcc",
    "PitchParams", "PitchTrack", "SemitoneTrack", "track_f0", "percentile",
    "hz_to_semitones",
    "F0Contour", "StimulusSpec", "sinusoidal_contour", "complicated_contour",
    "glottal_source", "vocal_tract_filter", "generate_corpus",
    "Dataset", "RegressionModel", "assemble_features", "align_targets",
    "fit_ols", "predict",
    "Corpus", "Utterance", "EvalReport", "CrossMatrix",
    "rmse", "pearson", "run_experiment", "cross_matrix", "ablation",
    "load_corpus",
    "__version__",
]
