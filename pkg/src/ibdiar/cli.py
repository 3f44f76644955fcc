"""Command-line interface.

Subcommands: features (WAV to feature file), diarize (feature/WAV input
to RTTM plus JSON report), score (RTTM pair to error report), synth
(generate a test corpus), bench (RTF table over a corpus directory).

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 internal
error. Set IBD_LOG=DEBUG|INFO|WARNING for diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from multiprocessing import Pool
from pathlib import Path

from . import __version__
from .backend import BACKEND_NAME
from .diarization import read_rttm, write_rttm
from .errors import IbdiarError
from .features import (
    decode_wav,
    extract_mfcc,
    read_features,
    write_features,
    write_features_csv,
)
from .fusion import FusionWeights
from .pipeline import MODES, PipelineConfig, diarize
from .scoring import compute_ser
from .segmentation import load_phoneme_boundaries, load_speech_mask
from .synth import SynthSpec, synth_conversation, write_corpus_files

log = logging.getLogger("ibdiar")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ibdiar", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_feat = sub.add_parser("features", help="extract MFCC features from WAV")
    p_feat.add_argument("--wav", required=True)
    p_feat.add_argument("--out", required=True)
    p_feat.add_argument("--csv", help="optional CSV debug export")

    p_diar = sub.add_parser("diarize", help="diarize one recording")
    src = p_diar.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", help="feature file produced by 'features'")
    src.add_argument("--wav", help="WAV input (features extracted on the fly)")
    p_diar.add_argument("--mask", required=True, help="speech mask file")
    p_diar.add_argument("--phn-boundaries", help="phoneme boundary file")
    p_diar.add_argument("--rttm-out", required=True)
    p_diar.add_argument("--report-out", help="JSON run report")
    p_diar.add_argument("--recording-id")
    _add_config_flags(p_diar)

    p_score = sub.add_parser("score", help="score hypothesis RTTM against reference")
    p_score.add_argument("--ref", required=True)
    p_score.add_argument("--hyp", required=True)
    p_score.add_argument("--collar", type=float, default=0.025)
    p_score.add_argument("--no-overlap", action="store_true",
                         help="skip regions with overlapped reference speech")
    p_score.add_argument("--json", help="write the report as JSON")

    p_synth = sub.add_parser("synth", help="generate a synthetic corpus")
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--num-speakers", type=int, default=3)
    p_synth.add_argument("--duration", type=float, default=300.0)
    p_synth.add_argument("--dims", type=int, default=19)
    p_synth.add_argument("--mean-radius", type=float, default=6.0)
    p_synth.add_argument("--turn-range", default="5,15")
    p_synth.add_argument("--phn-rate-range", default="8,20")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--count", type=int, default=1,
                         help="number of recordings (seeds seed..seed+count-1)")

    p_bench = sub.add_parser("bench", help="RTF table over a corpus directory")
    p_bench.add_argument("--corpus", required=True,
                         help="directory of <id>.feat/.mask/.phn files")
    p_bench.add_argument("--modes", default="ib,varib")
    _add_config_flags(p_bench)
    return parser


def _add_config_flags(parser) -> None:
    defaults = PipelineConfig()
    parser.add_argument("--mode", choices=MODES, default=defaults.mode)
    parser.add_argument("--seg-len", type=float, default=defaults.seg_len)
    parser.add_argument("--min-len", type=float, default=defaults.min_len)
    parser.add_argument("--max-len", type=float, default=defaults.max_len)
    parser.add_argument("--phn-rate", type=int, default=defaults.phn_rate)
    parser.add_argument("--nmi", type=float, default=defaults.nmi)
    parser.add_argument("--beta", type=float, default=defaults.beta)
    parser.add_argument("--first-pass-clusters", type=int,
                        default=defaults.first_pass_count)
    parser.add_argument("--prune-min", type=float, default=defaults.prune_min)
    parser.add_argument("--min-dur", type=float, default=defaults.min_dur)
    parser.add_argument("--fusion-weights", metavar="WN,WL",
                        help="network,LDA posterior weights (default per mode)")
    parser.add_argument("--collar", type=float, default=0.025,
                        help="accepted for symmetry with 'score'")
    parser.add_argument("--seed", type=int, default=defaults.seed)
    parser.add_argument("--jobs", type=int, default=1)


def _config_from_args(args, mode=None) -> PipelineConfig:
    fusion = None
    if args.fusion_weights:
        weights = FusionWeights.parse(args.fusion_weights)
        fusion = (weights.w_nn, weights.w_lda)
    return PipelineConfig(
        mode=mode or args.mode, seg_len=args.seg_len, min_len=args.min_len,
        max_len=args.max_len, phn_rate=args.phn_rate, nmi=args.nmi,
        beta=args.beta, first_pass_count=args.first_pass_clusters,
        prune_min=args.prune_min, min_dur=args.min_dur, fusion=fusion,
        seed=args.seed,
    )


def _load_inputs(args):
    if args.features:
        stream = read_features(args.features, recording_id=args.recording_id)
    else:
        samples, rate = decode_wav(args.wav)
        rec = args.recording_id or Path(args.wav).stem
        stream = extract_mfcc(samples, rate, recording_id=rec)
    mask = load_speech_mask(args.mask)
    phonemes = None
    if args.phn_boundaries:
        phonemes = load_phoneme_boundaries(args.phn_boundaries)
    return stream, mask, phonemes


def _cmd_features(args) -> int:
    samples, rate = decode_wav(args.wav)
    stream = extract_mfcc(samples, rate, recording_id=Path(args.wav).stem)
    write_features(args.out, stream)
    if args.csv:
        write_features_csv(args.csv, stream)
    log.info("wrote %d frames x %d dims to %s", stream.n_frames, stream.dims,
             args.out)
    return 0


def _cmd_diarize(args) -> int:
    config = _config_from_args(args)
    if config.varying and not args.phn_boundaries:
        raise UsageError(
            f"mode {config.mode} requires --phn-boundaries"
        )
    stream, mask, phonemes = _load_inputs(args)
    result = diarize(stream, mask, phonemes, config)
    write_rttm(args.rttm_out, result.diarization)
    for warning in result.warnings:
        log.warning("%s", warning)
    if args.report_out:
        with open(args.report_out, "w") as handle:
            json.dump(result.report_dict(), handle, indent=2)
    log.info("mode=%s clusters=%d rtf=%.4f backend=%s", config.mode,
             result.final_n_clusters, result.rtf.total_rtf, BACKEND_NAME)
    return 0


def _cmd_score(args) -> int:
    refs = read_rttm(args.ref)
    hyps = read_rttm(args.hyp)
    common = [rec for rec in refs if rec in hyps]
    if not common:
        raise IbdiarError("no common recording ids between ref and hyp")
    reports = {
        rec: compute_ser(refs[rec], hyps[rec], collar=args.collar,
                         score_overlap=not args.no_overlap)
        for rec in common
    }
    scored = sum(r.scored_time for r in reports.values())
    overall = {
        "ser": 100.0 * sum(r.ser_seconds for r in reports.values()) / scored,
        "ms": 100.0 * sum(r.ms_seconds for r in reports.values()) / scored,
        "fa": 100.0 * sum(r.fa_seconds for r in reports.values()) / scored,
    }
    overall["der"] = overall["ser"] + overall["ms"] + overall["fa"]
    for rec in common:
        print(f"--- {rec}")
        print(reports[rec].table())
    if len(common) > 1:
        print("--- overall")
        print("\n".join(f"{k:<17}  {v:6.2f} %" for k, v in overall.items()))
    if args.json:
        payload = {rec: reports[rec].as_dict() for rec in common}
        payload["overall"] = overall
        with open(args.json, "w") as handle:
            json.dump(payload, handle, indent=2)
    return 0


def _cmd_synth(args) -> int:
    turn = tuple(float(v) for v in args.turn_range.split(","))
    rates = tuple(float(v) for v in args.phn_rate_range.split(","))
    if len(turn) != 2 or len(rates) != 2:
        raise UsageError("--turn-range and --phn-rate-range take 'lo,hi'")
    for seed in range(args.seed, args.seed + args.count):
        spec = SynthSpec(num_speakers=args.num_speakers,
                         duration=args.duration, dims=args.dims,
                         mean_radius=args.mean_radius, turn_range=turn,
                         phoneme_rate_range=rates, seed=seed)
        paths = write_corpus_files(synth_conversation(spec), args.out_dir)
        log.info("wrote %s", paths["features"])
    print(f"wrote {args.count} recording(s) to {args.out_dir}")
    return 0


def _bench_one(task):
    corpus, rec, mode, args_dict = task
    args = argparse.Namespace(**args_dict)
    stream = read_features(Path(corpus) / f"{rec}.feat", recording_id=rec)
    mask = load_speech_mask(Path(corpus) / f"{rec}.mask")
    phn_path = Path(corpus) / f"{rec}.phn"
    phonemes = load_phoneme_boundaries(phn_path) if phn_path.exists() else None
    config = _config_from_args(args, mode=mode)
    result = diarize(stream, mask, phonemes, config)
    return rec, mode, result.rtf


def _cmd_bench(args) -> int:
    corpus = Path(args.corpus)
    recs = sorted(p.stem for p in corpus.glob("*.feat"))
    if not recs:
        raise IbdiarError(f"no .feat files under {corpus}")
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in MODES:
            raise UsageError(f"unknown mode {mode!r}")
    tasks = [(str(corpus), rec, mode, vars(args)) for rec in recs
             for mode in modes]
    if args.jobs > 1:
        with Pool(args.jobs) as pool:
            results = pool.map(_bench_one, tasks)
    else:
        results = [_bench_one(task) for task in tasks]

    print(f"kernel backend: {BACKEND_NAME}")
    header = f"{'recording':<16} {'mode':<14} {'audio_s':>8} {'wall_s':>8} {'rtf':>8}"
    print(header)
    print("-" * len(header))
    for rec, mode, rtf in results:
        print(f"{rec:<16} {mode:<14} {rtf.audio_seconds:>8.1f} "
              f"{rtf.total_seconds:>8.2f} {rtf.total_rtf:>8.4f}")
    by_stage: dict[str, float] = {}
    for _, _, rtf in results:
        for stage in rtf.stages:
            by_stage[stage.name] = by_stage.get(stage.name, 0.0) + stage.seconds
    print("\nstage totals (s): " + "  ".join(
        f"{name}={secs:.2f}" for name, secs in by_stage.items()))
    return 0


def main(argv=None) -> int:
    level = getattr(logging, os.environ.get("IBD_LOG", "WARNING").upper(),
                    logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "features": _cmd_features,
            "diarize": _cmd_diarize,
            "score": _cmd_score,
            "synth": _cmd_synth,
            "bench": _cmd_bench,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (IbdiarError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
