"""Command-line front end: ``synth``, ``extract``, and ``eval`` subcommands.

Every command resolves its configuration (config file values overridden by
flags), persists the result as ``config.json`` in the output directory, and
writes its artifacts atomically, so a finished directory always describes a
reproducible run.

Exit codes: 0 success, 1 user/input error, 2 internal failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import evaluation, synth
from ._util import atomic_write_text, fmt_float, natural_key
from .audio_io import read_wav, resample
from .dsp import FrameSpec, mfcc, write_mfcc_csv
from .errors import PitchcovError
from .pitch import PitchParams, track_f0, write_track_csv

CANONICAL_RATE_HZ = 16000


@dataclass
class SynthSettings:
    mechanism: str = synth.MECHANISM_SINUSOIDAL
    n_utterances: int = 60
    duration_s: float = 5.0
    open_quotient: float = synth.DEFAULT_OPEN_QUOTIENT


@dataclass
class RunConfig:
    """Everything a batch run depends on, JSON-serializable field for field."""

    frame: FrameSpec = field(default_factory=FrameSpec)
    pitch: PitchParams = field(default_factory=PitchParams)
    synth: SynthSettings = field(default_factory=SynthSettings)
    sample_rate_hz: int = CANONICAL_RATE_HZ
    split: float = 0.8
    runs: int = 10
    context_k: int = 0
    seed: int = 0
    jobs: int = 1


def _dataclass_from(cls, data: dict, where: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown config key(s) in {where}: {', '.join(unknown)}")
    return cls(**data)


def load_config(path: str | Path) -> RunConfig:
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    parts = {
        "frame": _dataclass_from(FrameSpec, raw.pop("frame", {}), "frame"),
        "pitch": _dataclass_from(PitchParams, raw.pop("pitch", {}), "pitch"),
        "synth": _dataclass_from(SynthSettings, raw.pop("synth", {}), "synth"),
    }
    config = _dataclass_from(RunConfig, raw, "config")
    return dataclasses.replace(config, **parts)


def _resolve_config(args) -> RunConfig:
    """Start from the config file (if any), then apply flag overrides."""
    config = load_config(args.config) if args.config else RunConfig()
    for name in ("split", "runs", "context_k", "seed", "jobs"):
        value = getattr(args, name, None)
        if value is not None:
            config = dataclasses.replace(config, **{name: value})
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        raise ValueError("--seed must fit in an unsigned 64-bit integer")
    synth_overrides = {
        "mechanism": getattr(args, "mechanism", None),
        "n_utterances": getattr(args, "n", None),
        "duration_s": getattr(args, "duration", None),
    }
    synth_overrides = {k: v for k, v in synth_overrides.items() if v is not None}
    if synth_overrides:
        config = dataclasses.replace(
            config, synth=dataclasses.replace(config.synth, **synth_overrides)
        )
    return config


def _write_config(out_dir: Path, config: RunConfig, command: str, **paths) -> None:
    resolved = dataclasses.asdict(config)
    resolved["command"] = command
    resolved.update({k: v for k, v in paths.items() if v is not None})
    atomic_write_text(
        out_dir / "config.json", json.dumps(resolved, indent=2, sort_keys=True) + "\n"
    )


def _prepare_out_dir(out: str) -> Path:
    out_dir = Path(out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"cannot write to output directory {out_dir}: {exc}") from exc
    return out_dir


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def _synth_one(job):
    mechanism, index, seed, duration, rate, open_quotient = job
    return synth.generate_utterance(mechanism, index, seed, duration, rate,
                                    open_quotient=open_quotient)


def cmd_synth(args) -> int:
    config = _resolve_config(args)
    out_dir = _prepare_out_dir(args.out)
    settings = config.synth
    jobs = [
        (settings.mechanism, i, config.seed, settings.duration_s,
         config.sample_rate_hz, settings.open_quotient)
        for i in range(settings.n_utterances)
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            items = list(pool.map(_synth_one, jobs))
    else:
        items = [_synth_one(job) for job in jobs]
    synth.write_corpus(out_dir, items)
    _write_config(out_dir, config, "synth", out=str(args.out))
    total = sum(audio.duration_s for _, audio in items)
    print(f"wrote {len(items)} utterances ({total:.1f} s) to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------

def _extract_one(job) -> str | None:
    """Analyze one WAV; returns a warning message instead of raising."""
    wav_path, out_dir, frame_spec, pitch_params, rate = job
    try:
        audio = resample(read_wav(wav_path), rate)
        features = mfcc(audio, frame_spec)
        track = track_f0(audio, pitch_params)
    except PitchcovError as exc:
        return f"skipping {wav_path.name}: {exc}"
    stem = wav_path.stem
    write_mfcc_csv(out_dir / f"{stem}.mfcc.csv", features)
    write_track_csv(out_dir / f"{stem}.f0.csv", track)
    return None


def cmd_extract(args) -> int:
    config = _resolve_config(args)
    corpus_dir = Path(args.corpus)
    if not corpus_dir.is_dir():
        raise FileNotFoundError(f"corpus directory {corpus_dir} does not exist")
    wavs = sorted(corpus_dir.glob("*.wav"), key=lambda p: natural_key(p.name))
    if not wavs:
        raise FileNotFoundError(f"no WAV files in {corpus_dir}")
    out_dir = _prepare_out_dir(args.out or str(corpus_dir))

    jobs = [
        (wav, out_dir, config.frame, config.pitch, config.sample_rate_hz)
        for wav in wavs
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            warnings = list(pool.map(_extract_one, jobs))
    else:
        warnings = [_extract_one(job) for job in jobs]
    for message in warnings:
        if message:
            print(f"warning: {message}", file=sys.stderr)
    done = sum(1 for m in warnings if m is None)
    _write_config(out_dir, config, "extract", corpus=str(args.corpus),
                  out=str(out_dir))
    print(f"extracted features for {done}/{len(wavs)} utterances into {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _parse_fractions(text: str) -> list[float]:
    try:
        start, stop, step = (float(tok) for tok in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"--fractions expects start:stop:step, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ValueError(f"bad fraction range {text!r}")
    count = int(round((stop - start) / step)) + 1
    return [round(start + k * step, 10) for k in range(count)]


def _write_experiments_csv(out_dir: Path, records) -> None:
    lines = ["train,test,run,rmse,r,p,n,base_train,base_test"]
    for rec in records:
        lines.append(",".join([
            rec.train_id, rec.test_id, str(rec.run), fmt_float(rec.rmse),
            fmt_float(rec.r), fmt_float(rec.p), str(rec.n),
            fmt_float(rec.base_train), fmt_float(rec.base_test),
        ]))
    atomic_write_text(out_dir / "experiments.csv", "\n".join(lines) + "\n")


def _write_matrix_csv(out_dir: Path, matrix) -> None:
    lines = ["train,test,mean_r,significant"]
    for i, train_id in enumerate(matrix.conditions):
        for j, test_id in enumerate(matrix.conditions):
            lines.append(",".join([
                train_id, test_id, fmt_float(matrix.mean_r[i, j]),
                "1" if matrix.significant[i, j] else "0",
            ]))
    atomic_write_text(out_dir / "matrix.csv", "\n".join(lines) + "\n")


def _write_ablation_csv(out_dir: Path, points) -> None:
    lines = ["fraction,rmse,r"]
    for pt in points:
        lines.append(
            f"{fmt_float(pt.fraction)},{fmt_float(pt.rmse)},{fmt_float(pt.pearson_r)}"
        )
    atomic_write_text(out_dir / "ablation.csv", "\n".join(lines) + "\n")


def _write_percoeff_csv(out_dir: Path, result) -> None:
    lines = ["coeff,r,p"]
    for i in range(result.r.size):
        lines.append(f"{i},{fmt_float(result.r[i])},{fmt_float(result.p[i])}")
    atomic_write_text(out_dir / "percoeff.csv", "\n".join(lines) + "\n")


def _write_traces(out_dir: Path, traces, render: bool) -> None:
    for utt_id, (times, gold, pred) in sorted(traces.items()):
        lines = ["time_s,gold_st,pred_st"]
        for t, g, p in zip(times, gold, pred):
            lines.append(f"{fmt_float(t)},{fmt_float(g)},{fmt_float(p)}")
        atomic_write_text(out_dir / f"trace_{utt_id}.csv", "\n".join(lines) + "\n")
        if render:
            from . import figures

            figures.plot_trace(times, gold, pred, out_dir / f"trace_{utt_id}.png",
                               title=utt_id)


def cmd_eval(args) -> int:
    config = _resolve_config(args)
    out_dir = _prepare_out_dir(args.out)
    render = not args.no_figures
    report_json: dict = {}

    if args.matrix:
        ids = [Path(d).name for d in args.matrix]
        if len(set(ids)) != len(ids):  # basename collision: use the full paths
            ids = [str(d) for d in args.matrix]
        conditions = [
            evaluation.load_corpus(d, condition_id=cid)
            for d, cid in zip(args.matrix, ids)
        ]
        matrix, records = evaluation.cross_matrix(
            conditions, runs=config.runs, seed=config.seed,
            split=config.split, context_k=config.context_k,
        )
        _write_experiments_csv(out_dir, records)
        _write_matrix_csv(out_dir, matrix)
        if render:
            from . import figures

            figures.plot_matrix(matrix, out_dir / "matrix.png")
        report_json["matrix"] = {
            "conditions": matrix.conditions,
            "mean_r": matrix.mean_r.tolist(),
            "significant": matrix.significant.tolist(),
            "runs": matrix.runs,
        }
        train_corpus = conditions[0]
    else:
        if not args.train:
            raise ValueError("eval needs --train (or --matrix)")
        train_corpus = evaluation.load_corpus(args.train)
        test_corpus = (
            train_corpus
            if not args.test or Path(args.test).resolve() == Path(args.train).resolve()
            else evaluation.load_corpus(args.test)
        )
        report, records, traces = evaluation.run_experiment(
            train_corpus, test_corpus, split=config.split, runs=config.runs,
            seed=config.seed, context_k=config.context_k,
        )
        _write_experiments_csv(out_dir, records)
        _write_traces(out_dir, traces, render)
        report_json["experiment"] = {
            "train": train_corpus.condition_id,
            "test": test_corpus.condition_id,
            "protocol": "self-split" if train_corpus is test_corpus else "cross-full",
            "runs": config.runs,
            "split": config.split,
            "context_k": config.context_k,
            "rmse_semitones": report.rmse_semitones,
            "pearson_r": report.pearson_r,
            "p_value": report.p_value,
            "n_frames": report.n_frames,
            "base_hz_train": report.base_hz_train,
            "base_hz_test": report.base_hz_test,
            "train_rmse_semitones": float(np.mean([r.train_rmse for r in records])),
        }

    if args.ablation:
        fractions = _parse_fractions(args.fractions) if args.fractions else None
        points = evaluation.ablation(
            train_corpus, fractions, runs=config.runs, seed=config.seed,
            split=config.split, context_k=config.context_k,
        )
        _write_ablation_csv(out_dir, points)
        if render:
            from . import figures

            figures.plot_ablation(points, out_dir / "ablation.png")
        report_json["ablation"] = [dataclasses.asdict(pt) for pt in points]

    if args.percoeff:
        result = evaluation.corpus_coefficient_correlations(train_corpus)
        _write_percoeff_csv(out_dir, result)
        if render:
            from . import figures

            figures.plot_coefficient_correlations(result, out_dir / "percoeff.png")
        report_json["per_coefficient"] = {
            "r": [None if c else float(v) for v, c in zip(result.r, result.constant)],
            "p": [None if c else float(v) for v, c in zip(result.p, result.constant)],
        }

    atomic_write_text(
        out_dir / "report.json", json.dumps(report_json, indent=2, sort_keys=True) + "\n"
    )
    _write_config(
        out_dir, config, "eval",
        train=args.train, test=args.test,
        matrix=list(args.matrix) if args.matrix else None,
        out=str(args.out),
    )
    print(f"wrote evaluation reports to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2; that code is
        self.print_usage(sys.stderr)  # reserved for internal failures here
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file (flags override it)")
    common.add_argument("--seed", type=int, help="master seed (u64)")
    common.add_argument("--jobs", type=int, help="parallel workers")

    parser = _Parser(prog="pitchcov",
                     description="Pitch prediction from coarse spectral features")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", parents=[common],
                             help="generate a synthetic corpus")
    p_synth.add_argument("--mechanism", choices=synth.MECHANISMS)
    p_synth.add_argument("--n", type=int, help="number of utterances")
    p_synth.add_argument("--duration", type=float, help="utterance length (s)")
    p_synth.add_argument("--out", required=True, help="corpus output directory")
    p_synth.set_defaults(func=cmd_synth)

    p_extract = sub.add_parser("extract", parents=[common],
                               help="compute features and pitch tracks for a corpus")
    p_extract.add_argument("--corpus", required=True, help="directory of WAV files")
    p_extract.add_argument("--out", help="output directory (default: corpus dir)")
    p_extract.set_defaults(func=cmd_extract)

    p_eval = sub.add_parser("eval", parents=[common],
                            help="run regression experiments on extracted corpora")
    p_eval.add_argument("--train", help="training corpus directory")
    p_eval.add_argument("--test", help="test corpus directory (default: --train)")
    p_eval.add_argument("--matrix", nargs="+", metavar="DIR",
                        help="evaluate all ordered pairs of these conditions")
    p_eval.add_argument("--ablation", action="store_true",
                        help="training-size ablation on the training corpus")
    p_eval.add_argument("--fractions", help="ablation fractions as start:stop:step")
    p_eval.add_argument("--percoeff", action="store_true",
                        help="per-coefficient correlations on the training corpus")
    p_eval.add_argument("--runs", type=int, help="repeated splits per cell")
    p_eval.add_argument("--split", type=float, help="training fraction for self-splits")
    p_eval.add_argument("--context-k", dest="context_k", type=int,
                        help="stack k context frames on each side")
    p_eval.add_argument("--out", required=True, help="report output directory")
    p_eval.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering next to the CSV reports")
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        return args.func(args)
    except (PitchcovError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


def entrypoint() -> None:
    sys.exit(main())
