"""End-to-end orchestration of the diarization variants.

Stage order per mode:

* ib / varib: init, posteriors, clustering (NMI stop), realignment.
* *-nn: first pass as above, then prune, network training, projection
  plus orthogonalization, second-pass posteriors/clustering/realignment.
* *-lda: first pass stops at a fixed cluster count and skips the first
  realignment; LDA projection is not orthogonalized.
* *-fused: the first pass follows the NN branch; both discriminators
  train on its labels and frame posteriors are fused before the second
  pass.

var* modes use varying-length initialization and duration weighting in
both passes.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .aib import IbState, StoppingRule, TrajectoryPoint, init_ib_state, run_aib
from .diarization import Diarization, DiarizationEntry
from .discriminative import (
    MfnnModel,
    pca_orthogonalize,
    project_lda,
    project_mfnn,
    prune_short_clusters,
    train_lda,
    train_mfnn,
)
from .errors import TrainingImpossibleError
from .features import FeatureStream
from .fusion import FusionWeights, fuse_posteriors
from .gmm import (
    estimate_gmm,
    frame_posteriors,
    merge_degenerate_segments,
    segment_posteriors,
)
from .realign import kl_hmm_realign
from .segmentation import (
    PhonemeBoundaryList,
    SpeechMask,
    fixed_length_init,
    speech_frame_indices,
    varying_length_init,
)

MODES = ("ib", "varib", "tpib-nn", "tpib-lda", "tpib-fused",
         "vartpib-nn", "vartpib-lda", "vartpib-fused")

#: Best reported fusion weights (network, LDA) per initialization.
DEFAULT_FUSION = {"tpib-fused": (0.2, 0.8), "vartpib-fused": (0.6, 0.4)}


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = "ib"
    seg_len: float = 2.5
    min_len: float = 2.0
    max_len: float = 5.0
    phn_rate: int = 23
    nmi: float = 0.4
    beta: float = 10.0
    first_pass_count: int = 20
    prune_min: float = 3.0
    min_dur: float = 2.5
    fusion: tuple[float, float] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        for name in ("seg_len", "min_len", "max_len", "nmi", "beta",
                     "prune_min", "min_dur"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.first_pass_count < 2:
            raise ValueError("first_pass_count must be at least 2")

    @property
    def varying(self) -> bool:
        return self.mode.startswith("var")

    @property
    def fusion_weights(self) -> FusionWeights:
        pair = self.fusion or DEFAULT_FUSION.get(self.mode, (0.5, 0.5))
        return FusionWeights(w_nn=pair[0], w_lda=pair[1])


@dataclass
class StageTime:
    name: str
    seconds: float
    rtf: float


@dataclass
class RtfReport:
    stages: list[StageTime]
    audio_seconds: float
    total_seconds: float
    total_rtf: float

    def as_dict(self) -> dict:
        return {
            "audio_seconds": self.audio_seconds,
            "total_seconds": self.total_seconds,
            "total_rtf": self.total_rtf,
            "stages": {s.name: {"seconds": s.seconds, "rtf": s.rtf}
                       for s in self.stages},
        }


def measure_rtf(stage_seconds: list[tuple[str, float]],
                audio_seconds: float) -> RtfReport:
    """Per-stage and total real-time factors from wall-clock timings."""
    stages = [StageTime(name, secs, secs / audio_seconds)
              for name, secs in stage_seconds]
    total = sum(secs for _, secs in stage_seconds)
    return RtfReport(stages=stages, audio_seconds=audio_seconds,
                     total_seconds=total, total_rtf=total / audio_seconds)


@dataclass
class DiarizeResult:
    diarization: Diarization
    config: PipelineConfig
    rtf: RtfReport
    warnings: list[str] = field(default_factory=list)
    n_realignments: int = 0
    first_pass_diarization: Diarization | None = None
    trajectory_first: list[TrajectoryPoint] = field(default_factory=list)
    trajectory_second: list[TrajectoryPoint] | None = None
    first_pass_n_clusters: int = 0
    final_n_clusters: int = 0
    train_labels: np.ndarray | None = None
    latent_nn: FeatureStream | None = None
    latent_lda: FeatureStream | None = None
    mfnn: MfnnModel | None = None

    def report_dict(self) -> dict:
        def _traj(points):
            return [
                {"n_clusters": p.n_clusters, "i_yc": p.i_yc, "i_cx": p.i_cx,
                 "nmi": p.nmi, "merged_pair": p.merged_pair, "delta": p.delta}
                for p in points
            ]
        report = {
            "recording_id": self.diarization.recording_id,
            "config": {k: list(v) if isinstance(v, tuple) else v
                       for k, v in vars(self.config).items()},
            "warnings": self.warnings,
            "n_realignments": self.n_realignments,
            "first_pass_n_clusters": self.first_pass_n_clusters,
            "final_n_clusters": self.final_n_clusters,
            "rtf": self.rtf.as_dict(),
            "trajectory_first": _traj(self.trajectory_first),
        }
        if self.trajectory_second is not None:
            report["trajectory_second"] = _traj(self.trajectory_second)
        if self.mfnn is not None:
            report["mfnn_initial_loss"] = self.mfnn.initial_loss
            report["mfnn_final_loss"] = self.mfnn.final_loss
        return report


@contextmanager
def _stage(timings: list, name: str):
    start = time.perf_counter()
    yield
    timings.append((name, time.perf_counter() - start))


def _initial_segments(features, mask, phonemes, config):
    if config.varying:
        if phonemes is None:
            raise ValueError(f"mode {config.mode} requires phoneme boundaries")
        segs = varying_length_init(mask, phonemes, config.min_len,
                                   config.max_len, config.phn_rate)
    else:
        segs = fixed_length_init(mask, config.seg_len)
    return merge_degenerate_segments(features, segs)


def _posterior_pass(stream, segs, weighting):
    gmm = estimate_gmm(stream, segs, weighting)
    fpost = frame_posteriors(gmm, stream)
    spost = segment_posteriors(fpost, segs, stream.frame_period)
    return fpost, spost


def _cluster(spost, segs, weighting, beta, stop):
    state = init_ib_state(spost, weighting, durations=segs.durations,
                          beta=beta)
    return run_aib(state, stop)


def _assignment_diarization(state: IbState, segs, recording_id) -> Diarization:
    labels = state.labels()
    entries = [
        DiarizationEntry(start=s, duration=e - s, speaker=f"spk{labels[i]}")
        for i, (s, e) in enumerate(segs.segments)
    ]
    return Diarization(entries=entries, recording_id=recording_id)


def _segment_frame_labels(state: IbState, segs, frame_period, speech) -> np.ndarray:
    """Cluster label per speech frame from the segment assignment."""
    from .segmentation import frame_range

    labels = state.labels()
    by_frame = {}
    for i, (s, e) in enumerate(segs.segments):
        k0, k1 = frame_range(s, e, frame_period)
        for k in range(k0, k1):
            by_frame[k] = labels[i]
    return np.array([by_frame.get(int(k), -1) for k in speech], dtype=np.int64)


def diarize(features: FeatureStream, mask: SpeechMask,
            phonemes: PhonemeBoundaryList | None = None,
            config: PipelineConfig = PipelineConfig()) -> DiarizeResult:
    """Run one recording through the configured variant."""
    timings: list[tuple[str, float]] = []
    warnings: list[str] = []
    rec = features.recording_id
    weighting = "duration" if config.varying else "uniform"
    speech = speech_frame_indices(mask, features.frame_period,
                                  features.n_frames)

    with _stage(timings, "segmentation"):
        segs = _initial_segments(features, mask, phonemes, config)

    with _stage(timings, "posteriors_1"):
        fpost1, spost1 = _posterior_pass(features, segs, weighting)

    lda_mode = config.mode.endswith("-lda")
    if lda_mode:
        count = config.first_pass_count
        if count > len(segs):
            warnings.append(
                f"first_pass_count clamped from {count} to {len(segs)}"
            )
            count = len(segs)
        stop1 = StoppingRule.cluster_count(count)
    else:
        stop1 = StoppingRule.nmi_threshold(config.nmi)

    with _stage(timings, "clustering_1"):
        state1 = _cluster(spost1, segs, weighting, config.beta, stop1)

    result = DiarizeResult(
        diarization=None,  # filled below
        config=config,
        rtf=None,
        warnings=warnings,
        trajectory_first=state1.trajectory,
        first_pass_n_clusters=state1.n_live,
    )

    n_realign = 0
    if config.mode in ("ib", "varib"):
        with _stage(timings, "realign_1"):
            realigned = kl_hmm_realign(fpost1, state1.cluster_conditionals(),
                                       mask, features.frame_period,
                                       config.min_dur, rec)
        n_realign += 1
        result.diarization = realigned.diarization
        result.final_n_clusters = realigned.n_clusters
        return _finish(result, timings, features, n_realign)

    # Two-pass variants: obtain first-pass labels for the discriminator.
    if lda_mode:
        first_diar = _assignment_diarization(state1, segs, rec)
        frame_labels = _segment_frame_labels(state1, segs,
                                             features.frame_period, speech)
    else:
        with _stage(timings, "realign_1"):
            realigned = kl_hmm_realign(fpost1, state1.cluster_conditionals(),
                                       mask, features.frame_period,
                                       config.min_dur, rec)
        n_realign += 1
        first_diar = realigned.diarization
        frame_labels = realigned.frame_labels
    result.first_pass_diarization = first_diar

    try:
        with _stage(timings, "discriminative_training"):
            _, kept = prune_short_clusters(first_diar, config.prune_min)
            kept_ids = [int(label[3:]) for label in kept]
            remap = {cid: pos for pos, cid in enumerate(kept_ids)}
            train_mask = np.isin(frame_labels, kept_ids)
            if not train_mask.any() or len(kept_ids) < 2:
                raise TrainingImpossibleError(
                    f"{len(kept_ids)} trainable clusters"
                )
            train_x = features.frames[speech[train_mask]]
            train_y = np.array([remap[int(l)] for l in frame_labels[train_mask]])
            remapped = np.array([remap.get(int(l), -1) for l in frame_labels])
            result.train_labels = np.where(train_mask, remapped, -1)
            nn_branch = config.mode.endswith(("-nn", "-fused"))
            lda_branch = config.mode.endswith(("-lda", "-fused"))
            mfnn = train_mfnn(train_x, train_y, seed=config.seed) \
                if nn_branch else None
            lda = train_lda(train_x, train_y) if lda_branch else None
    except TrainingImpossibleError as exc:
        warnings.append(f"training impossible ({exc}); "
                        "returning first-pass output")
        result.diarization = first_diar
        result.final_n_clusters = len(first_diar.speakers)
        return _finish(result, timings, features, n_realign)

    with _stage(timings, "projection"):
        if mfnn is not None:
            latent_nn, _ = pca_orthogonalize(project_mfnn(mfnn, features),
                                             fit_rows=speech)
            result.latent_nn = latent_nn
            result.mfnn = mfnn
        if lda is not None:
            latent_lda = project_lda(lda, features)
            result.latent_lda = latent_lda

    with _stage(timings, "posteriors_2"):
        if config.mode.endswith("-fused"):
            fpost_nn, _ = _posterior_pass(latent_nn, segs, weighting)
            fpost_lda, _ = _posterior_pass(latent_lda, segs, weighting)
            fpost2 = fuse_posteriors(fpost_nn, fpost_lda,
                                     config.fusion_weights)
            spost2 = segment_posteriors(fpost2, segs, features.frame_period)
        else:
            latent = latent_nn if mfnn is not None else latent_lda
            fpost2, spost2 = _posterior_pass(latent, segs, weighting)

    with _stage(timings, "clustering_2"):
        state2 = _cluster(spost2, segs, weighting, config.beta,
                          StoppingRule.nmi_threshold(config.nmi))
    result.trajectory_second = state2.trajectory

    with _stage(timings, "realign_2"):
        realigned2 = kl_hmm_realign(fpost2, state2.cluster_conditionals(),
                                    mask, features.frame_period,
                                    config.min_dur, rec)
    n_realign += 1
    result.diarization = realigned2.diarization
    result.final_n_clusters = realigned2.n_clusters
    return _finish(result, timings, features, n_realign)


def _finish(result: DiarizeResult, timings, features, n_realign) -> DiarizeResult:
    result.n_realignments = n_realign
    result.rtf = measure_rtf(timings, features.duration)
    return result
