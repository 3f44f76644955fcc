"""Seeded synthetic conversations with ground truth, plus brute-force
oracles for the clustering math.

Features are sampled directly in feature space (per-speaker diagonal
Gaussians); the front end has its own deterministic tests, so nothing
here depends on audio synthesis.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aib import StoppingRule
from .diarization import Diarization, DiarizationEntry, write_rttm
from .features import FeatureStream, write_features
from .segmentation import PhonemeBoundaryList, SpeechMask, write_intervals


@dataclass(frozen=True)
class SynthSpec:
    """Knobs for one synthetic conversation."""

    num_speakers: int = 3
    duration: float = 300.0
    dims: int = 19
    mean_radius: float = 6.0
    turn_range: tuple[float, float] = (5.0, 15.0)
    phoneme_rate_range: tuple[float, float] = (8.0, 20.0)
    variance_range: tuple[float, float] = (0.5, 1.5)
    seed: int = 0
    frame_period: float = 0.010

    def __post_init__(self):
        if self.num_speakers < 2:
            raise ValueError("need at least 2 speakers")
        if self.turn_range[0] > self.turn_range[1] or self.turn_range[0] <= 0:
            raise ValueError("bad turn_range")
        if self.duration < self.turn_range[0]:
            raise ValueError("duration shorter than one turn")


@dataclass
class SynthConversation:
    features: FeatureStream
    mask: SpeechMask
    phonemes: PhonemeBoundaryList
    reference: Diarization
    speaker_means: np.ndarray
    speaker_variances: np.ndarray


def synth_conversation(spec: SynthSpec,
                       recording_id: str | None = None) -> SynthConversation:
    """Round-robin turn-taking over per-speaker diagonal Gaussians.

    Speaker means lie uniformly on a sphere of radius mean_radius,
    per-dim variances are uniform in variance_range (default [0.5, 1.5];
    pin it to (1, 1) with radius 0 for an indistinguishable-speakers
    negative control), turn lengths are uniform in turn_range, and each
    speaker emits phoneme boundaries at a fixed per-speaker rate drawn
    from phoneme_rate_range.
    """
    if recording_id is None:
        recording_id = f"synth{spec.seed}"
    rng = np.random.default_rng(spec.seed)
    k = spec.num_speakers

    direction = rng.standard_normal((k, spec.dims))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    means = spec.mean_radius * direction
    variances = rng.uniform(*spec.variance_range, size=(k, spec.dims))
    phoneme_rates = rng.uniform(*spec.phoneme_rate_range, size=k)

    turns = []  # (start, end, speaker)
    t = 0.0
    speaker = 0
    while t < spec.duration - 1e-9:
        length = rng.uniform(*spec.turn_range)
        end = min(t + length, spec.duration)
        turns.append((t, end, speaker))
        t = end
        speaker = (speaker + 1) % k

    n_frames = int(round(spec.duration / spec.frame_period))
    frames = np.empty((n_frames, spec.dims))
    frame_speaker = np.empty(n_frames, dtype=np.int64)
    for start, end, spk in turns:
        k0 = int(np.ceil(start / spec.frame_period - 1e-6))
        k1 = min(int(np.ceil(end / spec.frame_period - 1e-6)), n_frames)
        if k1 <= k0:
            continue
        frame_speaker[k0:k1] = spk
        frames[k0:k1] = means[spk] + np.sqrt(variances[spk]) * rng.standard_normal(
            (k1 - k0, spec.dims))

    boundaries = []
    for start, end, spk in turns:
        step = 1.0 / phoneme_rates[spk]
        p = start
        while p + step <= end + 1e-9:
            boundaries.append((p, p + step))
            p += step

    entries = [
        DiarizationEntry(start=start, duration=end - start, speaker=f"spk{spk}")
        for start, end, spk in turns
    ]
    return SynthConversation(
        features=FeatureStream(frames, frame_period=spec.frame_period,
                               recording_id=recording_id),
        mask=SpeechMask([(0.0, spec.duration)]),
        phonemes=PhonemeBoundaryList(boundaries),
        reference=Diarization(entries=entries, recording_id=recording_id),
        speaker_means=means,
        speaker_variances=variances,
    )


def write_corpus_files(conv: SynthConversation, out_dir) -> dict[str, Path]:
    """Write the pipeline-consumable files for one conversation."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rec = conv.features.recording_id
    paths = {
        "features": out_dir / f"{rec}.feat",
        "mask": out_dir / f"{rec}.mask",
        "phonemes": out_dir / f"{rec}.phn",
        "reference": out_dir / f"{rec}.ref.rttm",
    }
    write_features(paths["features"], conv.features)
    write_intervals(paths["mask"], conv.mask.intervals)
    write_intervals(paths["phonemes"], conv.phonemes.boundaries)
    write_rttm(paths["reference"], conv.reference)
    return paths


# ---------------------------------------------------------------------------
# Brute-force clustering oracle
# ---------------------------------------------------------------------------


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _mutual_information(joint: np.ndarray) -> float:
    p_r = joint.sum(axis=1)
    p_c = joint.sum(axis=0)
    mask = joint > 0
    outer = np.outer(p_r, p_c)
    return float(np.sum(joint[mask] * np.log(joint[mask] / outer[mask])))


def _objective(members: dict[int, list[int]], rows: np.ndarray,
               p_x: np.ndarray, beta: float) -> float:
    """I(Y,C) - I(C,X)/beta evaluated from the full joints."""
    cluster_ids = sorted(members)
    joint_cy = np.stack([
        (p_x[members[c], None] * rows[members[c]]).sum(axis=0)
        for c in cluster_ids
    ])
    joint_cx = np.zeros((len(cluster_ids), len(p_x)))
    for row, c in enumerate(cluster_ids):
        joint_cx[row, members[c]] = p_x[members[c]]
    return _mutual_information(joint_cy) - _mutual_information(joint_cx) / beta


def brute_force_reference(seg_rows: np.ndarray, p_x: np.ndarray, beta: float,
                          stop: StoppingRule):
    """Exhaustive greedy clustering that re-evaluates the objective for
    every candidate merge from mutual-information definitions.

    Mirrors run_aib's conventions: the smaller cluster id survives a
    merge and ties pick the lowest (i, j) pair. Instances are capped at
    12 segments. Returns (merges, partition, assignment, objectives).
    """
    n = seg_rows.shape[0]
    if n > 12:
        raise ValueError("oracle instances are capped at 12 segments")
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    merges: list[tuple[int, int]] = []
    objectives = [_objective(members, seg_rows, p_x, beta)]

    if stop.kind == "cluster_count" and not 1 <= stop.count <= n:
        raise ValueError("unsatisfiable stopping rule")

    joint = p_x[:, None] * seg_rows
    i_xy = _mutual_information(joint)
    zero_information = i_xy < 1e-12

    while len(members) > 1 and not zero_information:
        if stop.kind == "cluster_count" and len(members) <= stop.count:
            break
        live = sorted(members)
        base = _objective(members, seg_rows, p_x, beta)
        best = None
        for a_pos, i in enumerate(live[:-1]):
            for j in live[a_pos + 1:]:
                trial = {c: m for c, m in members.items() if c != j}
                trial[i] = members[i] + members[j]
                delta = base - _objective(trial, seg_rows, p_x, beta)
                if best is None or delta < best[0]:
                    best = (delta, i, j)
        delta, i, j = best
        if stop.kind == "nmi_threshold":
            trial = {c: m for c, m in members.items() if c != j}
            trial[i] = members[i] + members[j]
            joint_cy = np.stack([
                (p_x[m, None] * seg_rows[m]).sum(axis=0)
                for _, m in sorted(trial.items())
            ])
            if _mutual_information(joint_cy) / i_xy < stop.nmi:
                break
        members[i] = members[i] + members[j]
        del members[j]
        merges.append((i, j))
        objectives.append(_objective(members, seg_rows, p_x, beta))

    assignment = np.empty(n, dtype=np.int64)
    for c, segs in members.items():
        assignment[segs] = c
    partition = {frozenset(m) for m in members.values()}
    return merges, partition, assignment, objectives
