"""Batch command-line front door.

Subcommands compose the pipeline: segments -> align -> mix -> (wpe |
beamform) -> eval. Every subcommand writes a machine-readable run manifest
(a config echo plus content hashes of inputs and outputs, no timestamps),
so identical configs and seeds reproduce byte-identical artifacts.

Manifest conventions between stages: `segments` and `align` emit
segment-annotation records whose start/end are positions inside the file
at source_path. `align` gives each aligned segment a derived recording id
of the form "<recording>#<speaker>#<start_ms>-<end_ms>" carrying one
"array" record (the multichannel far-field segment) and one "headset"
record (the matched-filtered, time-aligned reference); `mix` pairs records
by that id.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .align import SOLVERS, AlignConfig, align_segment
from .audio_io import AudioClip, read_audio, write_audio
from .beamform import (SteeringDelays, TfMask, apply_weights, das,
                       estimate_covariances, mvdr_weights)
from .dereverb import WpeConfig, wpe, wpe_time
from .errors import ConfigError, FrontendError, ShapeError
from .manifest import (Manifest, MixtureRecipe, SegmentAnnotation,
                       parse_manifest, serialize_manifest)
from .metrics import (ScoreReport, parse_sot, ser, si_sdr, si_sdri, wer)
from .mixgen import PooledClip, cut_clips, extract_nonoverlap_segments, synthesize_mixtures
from .stft import DEFAULT_STFT, StftConfig, istft, stft
from .tdoa import estimate_array_delays

WORKERS_ENV = "FARFIELD_WORKERS"

METHODS = ("das", "mvdr")
ORDERS = ("none", "wpe-first", "beamform-first")


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved processing settings; flag values win over config-file values."""

    stft: StftConfig = DEFAULT_STFT
    method: str = "das"
    wpe: WpeConfig = WpeConfig()
    order: str = "none"
    seed: int = 0
    channels: int = 8
    ref_channel: int = 0
    max_delay: int = 256
    filter_len: int = 1024
    regularization: float = 0.0
    solver: str = "dense"
    clip_len: float = 4.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.order not in ORDERS:
            raise ConfigError(f"order must be one of {ORDERS}, got {self.order!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from e
        return cls.from_dict(raw, source=str(path))

    @classmethod
    def from_dict(cls, raw: dict, source: str = "config") -> "PipelineConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"{source}: top level must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")
        kwargs = dict(raw)
        try:
            if "stft" in kwargs:
                kwargs["stft"] = StftConfig(**kwargs["stft"])
            if "wpe" in kwargs:
                kwargs["wpe"] = WpeConfig(**kwargs["wpe"])
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigError(f"{source}: {e}") from e

    def to_dict(self) -> dict:
        return asdict(self)


def _resolve_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if getattr(args, "config", None) \
        else PipelineConfig()
    overrides = {}
    for flag, field in [
        ("method", "method"), ("order", "order"), ("seed", "seed"),
        ("channels", "channels"), ("ref_channel", "ref_channel"),
        ("max_delay", "max_delay"), ("filter_len", "filter_len"),
        ("reg", "regularization"), ("solver", "solver"), ("clip_len", "clip_len"),
    ]:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    wpe_overrides = {}
    for flag, field in [("taps", "taps"), ("delay", "delay"), ("iters", "iterations")]:
        value = getattr(args, flag, None)
        if value is not None:
            wpe_overrides[field] = value
    if wpe_overrides:
        overrides["wpe"] = replace(config.wpe, **wpe_overrides)
    return replace(config, **overrides) if overrides else config


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    items = list(items)
    workers = _workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _json_value(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _write_run_manifest(out_dir: Path, subcommand: str, config: dict,
                        inputs: list[Path], outputs: list[Path]) -> Path:
    payload = {
        "subcommand": subcommand,
        "config": config,
        "inputs": [{"name": p.name, "sha256": _sha256(p)} for p in sorted(inputs)],
        "outputs": [{"name": p.name, "sha256": _sha256(p)} for p in sorted(outputs)],
    }
    path = out_dir / "run_manifest.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def _read_manifest_file(path: str) -> Manifest:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise FrontendError(f"{path}: {e}") from e
    try:
        return parse_manifest(text)
    except FrontendError as e:
        raise type(e)(f"{path}: {e}") from e


def _segment_samples(clip: AudioClip, record: SegmentAnnotation) -> AudioClip:
    lo = round(record.start * clip.sample_rate)
    hi = round(record.end * clip.sample_rate)
    if hi > clip.num_samples:
        raise ShapeError(
            f"{record.source_path}: segment [{record.start}, {record.end}]s ends beyond "
            f"the file ({clip.num_samples} samples at {clip.sample_rate} Hz)")
    return clip.segment(lo, hi)


# --------------------------------------------------------------------------
# segments


def cmd_segments(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _read_manifest_file(args.annotations)
    annotations = [r for r in manifest.records if isinstance(r, SegmentAnnotation)]

    by_recording: dict[str, list[SegmentAnnotation]] = {}
    for record in annotations:
        by_recording.setdefault(record.recording_id, []).append(record)

    produced: list[SegmentAnnotation] = []
    for recording_id in sorted(by_recording):
        records = by_recording[recording_id]
        for interval in extract_nonoverlap_segments(records):
            for record in records:
                if record.speaker_id != interval.speaker_id:
                    continue
                lo = max(record.start, interval.start)
                hi = min(record.end, interval.end)
                if hi > lo:
                    produced.append(SegmentAnnotation(
                        recording_id, interval.speaker_id, lo, hi,
                        record.channel_role, record.source_path))
    produced = sorted(set(produced),
                      key=lambda r: (r.recording_id, r.start, r.speaker_id, r.channel_role))

    out_path = out_dir / "segments.jsonl"
    out_path.write_text(serialize_manifest(Manifest(tuple(produced))))
    _write_run_manifest(out_dir, "segments", {"annotations": Path(args.annotations).name},
                        [Path(args.annotations)], [out_path])
    print(f"segments: {len(produced)} single-speaker records -> {out_path}")
    return 0


# --------------------------------------------------------------------------
# align


def _segment_key(record: SegmentAnnotation) -> tuple:
    return (record.recording_id, record.speaker_id, record.start, record.end)


def cmd_align(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _read_manifest_file(args.manifest)

    pairs: dict[tuple, dict[str, SegmentAnnotation]] = {}
    for record in manifest.records:
        if isinstance(record, SegmentAnnotation):
            pairs.setdefault(_segment_key(record), {})[record.channel_role] = record

    align_config = AlignConfig(config.filter_len, config.regularization, config.solver)
    outputs: list[Path] = []
    produced: list[SegmentAnnotation] = []
    skipped = 0

    def process(item):
        key, roles = item
        recording_id, speaker_id, start, end = key
        array_clip = _segment_samples(read_audio(roles["array"].source_path), roles["array"])
        headset_clip = _segment_samples(read_audio(roles["headset"].source_path),
                                        roles["headset"]).channel(0)
        if array_clip.sample_rate != headset_clip.sample_rate:
            raise FrontendError(
                f"{recording_id}: array and headset sample rates differ "
                f"({array_clip.sample_rate} vs {headset_clip.sample_rate})")
        aligned = align_segment(headset_clip,
                                array_clip.channel(min(config.ref_channel,
                                                       array_clip.num_channels - 1)),
                                align_config)
        start_ms, end_ms = round(start * 1000), round(end * 1000)
        segment_id = f"{recording_id}#{speaker_id}#{start_ms}-{end_ms}"
        base = f"{recording_id}_{speaker_id}_{start_ms:08d}-{end_ms:08d}"
        array_path = out_dir / f"{base}_array.wav"
        ref_path = out_dir / f"{base}_ref.wav"
        write_audio(array_clip, array_path, "float32")
        write_audio(aligned, ref_path, "float32")
        duration = array_clip.duration
        return [
            (array_path, SegmentAnnotation(segment_id, speaker_id, 0.0, duration,
                                           "array", str(array_path))),
            (ref_path, SegmentAnnotation(segment_id, speaker_id, 0.0, duration,
                                         "headset", str(ref_path))),
        ]

    complete = [(k, v) for k, v in sorted(pairs.items()) if {"array", "headset"} <= set(v)]
    skipped = len(pairs) - len(complete)
    for results in _map_ordered(process, complete):
        for path, record in results:
            outputs.append(path)
            produced.append(record)

    manifest_path = out_dir / "aligned.jsonl"
    manifest_path.write_text(serialize_manifest(Manifest(tuple(produced))))
    outputs.append(manifest_path)
    _write_run_manifest(out_dir, "align",
                        {"filter_len": config.filter_len,
                         "regularization": config.regularization,
                         "solver": config.solver,
                         "ref_channel": config.ref_channel},
                        [Path(args.manifest)], outputs)
    note = f" ({skipped} unpaired segments skipped)" if skipped else ""
    print(f"align: {len(complete)} segments aligned -> {out_dir}{note}")
    return 0


# --------------------------------------------------------------------------
# mix


def cmd_mix(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    if config.channels not in (2, 8):
        raise ConfigError(f"channels must be 2 or 8, got {config.channels}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _read_manifest_file(args.clips)

    pairs: dict[tuple, dict[str, SegmentAnnotation]] = {}
    for record in manifest.records:
        if isinstance(record, SegmentAnnotation):
            pairs.setdefault(_segment_key(record), {})[record.channel_role] = record

    pool: list[PooledClip] = []
    for key, roles in sorted(pairs.items()):
        if not {"array", "headset"} <= set(roles):
            continue
        recording_id, speaker_id, _, _ = key
        array = _segment_samples(read_audio(roles["array"].source_path), roles["array"])
        reference = _segment_samples(read_audio(roles["headset"].source_path),
                                     roles["headset"]).channel(0)
        if array.num_channels != config.channels:
            raise ShapeError(
                f"{roles['array'].source_path}: has {array.num_channels} channels, "
                f"expected {config.channels}")
        clip_samples = round(config.clip_len * array.sample_rate)
        n_clips = array.num_samples // clip_samples
        for k in range(n_clips):
            lo, hi = k * clip_samples, (k + 1) * clip_samples
            pool.append(PooledClip(
                clip_id=f"{recording_id}#c{k}",
                speaker_id=speaker_id,
                array=array.segment(lo, hi),
                reference=reference.segment(lo, hi),
            ))

    mixtures, references, recipes = synthesize_mixtures(
        pool, args.count, config.channels, config.seed)

    outputs: list[Path] = []
    for recipe, mixture, reference in zip(recipes.records, mixtures, references):
        mix_path = out_dir / f"{recipe.mixture_id}_mix.wav"
        ref_path = out_dir / f"{recipe.mixture_id}_ref.wav"
        write_audio(mixture, mix_path, "float32")
        write_audio(reference, ref_path, "float32")
        outputs.extend([mix_path, ref_path])

    recipes_path = out_dir / "recipes.jsonl"
    recipes_path.write_text(serialize_manifest(recipes))
    outputs.append(recipes_path)
    _write_run_manifest(out_dir, "mix",
                        {"count": args.count, "channels": config.channels,
                         "clip_len": config.clip_len, "seed": config.seed},
                        [Path(args.clips)], outputs)
    print(f"mix: {len(mixtures)} mixtures from a pool of {len(pool)} clips -> {out_dir}")
    return 0


# --------------------------------------------------------------------------
# beamform / wpe


def _run_front_end(clip: AudioClip, config: PipelineConfig, mask_path: str | None):
    spec = stft(clip, config.stft)
    if config.order == "wpe-first":
        spec = wpe(spec, config.wpe)
    if config.method == "das":
        estimates = estimate_array_delays(clip, config.ref_channel, config.max_delay)
        steering = SteeringDelays.from_estimates(estimates, config.ref_channel)
        fused = das(spec, steering)
    else:
        mask = TfMask(np.load(mask_path))
        covariances = estimate_covariances(spec, mask)
        weights = mvdr_weights(covariances.speech, covariances.noise, config.ref_channel)
        fused = apply_weights(spec, weights)
    if config.order == "beamform-first":
        fused = wpe(fused, config.wpe)
    return istft(fused)


def cmd_beamform(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    if config.method == "mvdr" and not args.mask:
        print("farfield beamform: error: --method mvdr requires --mask", file=sys.stderr)
        return 2
    clip = read_audio(args.input)
    if clip.num_channels < 2:
        raise ShapeError(f"{args.input}: beamforming needs >= 2 channels, "
                         f"got {clip.num_channels}")
    enhanced = _run_front_end(clip, config, args.mask)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_audio(enhanced, out_path, args.encoding)
    inputs = [Path(args.input)] + ([Path(args.mask)] if args.mask else [])
    _write_run_manifest(out_path.parent, "beamform",
                        {"method": config.method, "order": config.order,
                         "ref_channel": config.ref_channel, "max_delay": config.max_delay,
                         "wpe": asdict(config.wpe), "stft": asdict(config.stft)},
                        inputs, [out_path])
    print(f"beamform[{config.method}]: {args.input} -> {out_path}")
    return 0


def cmd_wpe(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    clip = read_audio(args.input)
    out = wpe_time(clip, config.stft, config.wpe)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_audio(out, out_path, args.encoding)
    _write_run_manifest(out_path.parent, "wpe",
                        {"wpe": asdict(config.wpe), "stft": asdict(config.stft)},
                        [Path(args.input)], [out_path])
    print(f"wpe: {args.input} -> {out_path}")
    return 0


# --------------------------------------------------------------------------
# eval


def cmd_eval(args: argparse.Namespace) -> int:
    audio_mode = args.est or args.ref
    text_mode = args.hyp or args.ref_text
    if audio_mode and not (args.est and args.ref):
        print("farfield eval: error: --est and --ref must be given together", file=sys.stderr)
        return 2
    if text_mode and not (args.hyp and args.ref_text):
        print("farfield eval: error: --hyp and --ref-text must be given together", file=sys.stderr)
        return 2
    if not audio_mode and not text_mode:
        print("farfield eval: error: nothing to score; pass --est/--ref or --hyp/--ref-text",
              file=sys.stderr)
        return 2

    report = ScoreReport()
    inputs: list[Path] = []
    if audio_mode:
        est = read_audio(args.est).channel(0)
        ref = read_audio(args.ref).channel(0)
        sdr = si_sdr(est, ref)
        sdri = None
        if args.baseline:
            baseline = read_audio(args.baseline).channel(0)
            sdri = si_sdri(est, ref, baseline)
            inputs.append(Path(args.baseline))
        report = replace(report, si_sdr_db=sdr, si_sdri_db=sdri)
        inputs.extend([Path(args.est), Path(args.ref)])
    if text_mode:
        hyp = parse_sot(Path(args.hyp).read_text())
        ref_t = parse_sot(Path(args.ref_text).read_text())
        hyp_words = [w for s in hyp.sentences for w in s.words]
        ref_words = [w for s in ref_t.sentences for w in s.words]
        word_result = wer(hyp_words, ref_words)
        ser_result = ser(hyp, ref_t)
        report = replace(report, wer_pct=word_result.wer_pct, ser_pct=ser_result.ser_pct,
                         substitutions=word_result.substitutions,
                         deletions=word_result.deletions,
                         insertions=word_result.insertions,
                         sentence_errors=ser_result.sentence_errors)
        inputs.extend([Path(args.hyp), Path(args.ref_text)])

    payload = {
        "subcommand": "eval",
        "inputs": [{"name": p.name, "sha256": _sha256(p)} for p in sorted(inputs)],
        "scores": {k: _json_value(v) for k, v in asdict(report).items() if v is not None},
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(text)
        print(f"eval: report -> {args.report}")
    else:
        print(text, end="")
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="farfield",
        description="Multichannel distant-microphone front-end pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segments", help="extract single-speaker intervals from annotations")
    p.add_argument("--annotations", required=True, help="annotation manifest (JSON lines)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_segments)

    p = sub.add_parser("align", help="matched-filter align headset segments to array segments")
    p.add_argument("--manifest", required=True, help="segment manifest from `segments`")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--filter-len", dest="filter_len", type=int, default=None)
    p.add_argument("--reg", type=float, default=None, help="relative regularization")
    p.add_argument("--solver", choices=SOLVERS, default=None)
    p.add_argument("--ref-channel", dest="ref_channel", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON config file; flags override it")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("mix", help="synthesize overlapped mixtures from aligned clips")
    p.add_argument("--clips", required=True, help="aligned-segment manifest from `align`")
    p.add_argument("--count", required=True, type=int)
    p.add_argument("--channels", type=int, choices=(2, 8), default=None)
    p.add_argument("--clip-len", dest="clip_len", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("beamform", help="fuse a multichannel WAV into one enhanced channel")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="output WAV path")
    p.add_argument("--method", choices=METHODS, default=None)
    p.add_argument("--mask", default=None, help=".npy [frame][bin] speech mask (mvdr)")
    p.add_argument("--ref-channel", dest="ref_channel", type=int, default=None)
    p.add_argument("--max-delay", dest="max_delay", type=int, default=None,
                   help="TDOA search range in samples (das)")
    p.add_argument("--order", choices=ORDERS, default=None,
                   help="where to run WPE; wpe-first is the recommended combination")
    p.add_argument("--taps", type=int, default=None)
    p.add_argument("--delay", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--encoding", choices=("float32", "pcm16"), default="float32")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_beamform)

    p = sub.add_parser("wpe", help="multichannel linear-prediction dereverberation")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="output WAV path")
    p.add_argument("--taps", type=int, default=None)
    p.add_argument("--delay", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--encoding", choices=("float32", "pcm16"), default="float32")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_wpe)

    p = sub.add_parser("eval", help="score enhancement and transcription outputs")
    p.add_argument("--est", default=None, help="estimated WAV")
    p.add_argument("--ref", default=None, help="reference WAV")
    p.add_argument("--baseline", default=None, help="unprocessed-mixture WAV for SI-SDRi")
    p.add_argument("--hyp", default=None, help="hypothesis transcript (speaker= tags, <sc>)")
    p.add_argument("--ref-text", dest="ref_text", default=None, help="reference transcript")
    p.add_argument("--report", default=None, help="write the JSON report here (default stdout)")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FrontendError as e:
        print(f"farfield {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
