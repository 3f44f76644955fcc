"""One step of KL-HMM boundary refinement.

Cluster multinomials score frames with KL(model || frame posterior); a
duration-constrained Viterbi pass relabels the speech frames, the
multinomials are re-estimated once from that labeling, and a second
pass produces the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import viterbi_min_duration
from .diarization import Diarization, diarization_from_frame_labels
from .gmm import PosteriorMatrix
from .segmentation import SpeechMask, speech_frame_indices

#: Probability floor applied to both sides of the KL cost.
KL_FLOOR = 1e-10


@dataclass
class RealignResult:
    diarization: Diarization
    frame_labels: np.ndarray      # per speech frame, mask order
    speech_frames: np.ndarray     # stream frame index per speech frame
    first_pass_cost: float
    second_pass_cost: float
    n_clusters: int


def _floor_rows(rows: np.ndarray) -> np.ndarray:
    rows = np.maximum(rows, KL_FLOOR)
    return rows / rows.sum(axis=-1, keepdims=True)


def _kl_costs(models: np.ndarray, log_frames: np.ndarray) -> np.ndarray:
    """cost[t, c] = KL(models[c] || frames[t]) given log frame rows."""
    model_term = np.sum(models * np.log(models), axis=1)
    return model_term[None, :] - log_frames @ models.T


def kl_hmm_realign(frame_post: PosteriorMatrix, cluster_posteriors: np.ndarray,
                   mask: SpeechMask, frame_period: float,
                   min_dur: float = 2.5,
                   recording_id: str = "") -> RealignResult:
    """Refine speaker boundaries against cluster posterior models.

    Label runs last at least min_dur seconds except where a speech
    region edge truncates them; clusters attracting no frames after the
    first decode are dropped before re-estimation.
    """
    if frame_post.level != "frame":
        raise ValueError("expected frame-level posteriors")
    if min_dur < frame_period:
        raise ValueError("min_dur must be at least one frame period")
    q = _floor_rows(np.atleast_2d(np.asarray(cluster_posteriors, dtype=np.float64)))
    speech = speech_frame_indices(mask, frame_period, frame_post.rows.shape[0])
    p = _floor_rows(frame_post.rows[speech])
    log_p = np.log(p)
    min_frames = max(1, int(round(min_dur / frame_period)))

    labels1, cost1 = viterbi_min_duration(_kl_costs(q, log_p), min_frames)

    kept = np.unique(labels1)
    q2 = np.stack([p[labels1 == c].mean(axis=0) for c in kept])
    q2 = _floor_rows(q2)
    labels2, cost2 = viterbi_min_duration(_kl_costs(q2, log_p), min_frames)

    return RealignResult(
        diarization=diarization_from_frame_labels(labels2, mask, frame_period,
                                                  recording_id),
        frame_labels=labels2,
        speech_frames=speech,
        first_pass_cost=cost1,
        second_pass_cost=cost2,
        n_clusters=int(np.unique(labels2).size),
    )
