"""Per-segment Gaussians and the posterior space used for clustering.

Each segment is modeled by one diagonal Gaussian; together they form a
GMM whose components are the relevance variables. Posteriors are
computed in the log domain and normalized with log-sum-exp.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateSegmentError
from .features import FeatureStream
from .segmentation import SegmentList, frame_range

#: Lower bound on fitted variances; keeps constant segments decodable.
VARIANCE_FLOOR = 1e-4

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class GmmModel:
    """One diagonal Gaussian per segment plus mixture weights."""

    means: np.ndarray       # (n_components, dims)
    variances: np.ndarray   # (n_components, dims), floored
    weights: np.ndarray     # (n_components,), sums to 1

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dims(self) -> int:
        return self.means.shape[1]


@dataclass
class PosteriorMatrix:
    """Row-stochastic posteriors over GMM components.

    ``level`` is "frame" for one row per feature frame or "segment" for
    one row per segment.
    """

    rows: np.ndarray
    level: str

    def __post_init__(self):
        if self.level not in ("frame", "segment"):
            raise ValueError(f"unknown posterior level {self.level!r}")

    @property
    def n_components(self) -> int:
        return self.rows.shape[1]

    def write_csv(self, path) -> None:
        np.savetxt(path, self.rows, delimiter=",")


def segment_frame_ranges(segs: SegmentList, frame_period: float,
                         n_frames: int) -> list[tuple[int, int]]:
    ranges = []
    for start, end in segs.segments:
        k0, k1 = frame_range(start, end, frame_period)
        ranges.append((min(k0, n_frames), min(k1, n_frames)))
    return ranges


def merge_degenerate_segments(stream: FeatureStream,
                              segs: SegmentList) -> SegmentList:
    """Fold segments holding fewer than two frames into an adjacent
    segment of the same speech region (the preceding one when possible).

    A degenerate segment with no adjacent neighbor is dropped; the
    realignment stage still covers its frames.
    """
    segments = list(segs.segments)
    residual = list(segs.residual)
    changed = True
    while changed:
        changed = False
        ranges = [frame_range(s, e, stream.frame_period) for s, e in segments]
        for i, (k0, k1) in enumerate(ranges):
            if k1 - k0 >= 2:
                continue
            s, e = segments[i]
            if i > 0 and abs(segments[i - 1][1] - s) < 1e-9:
                segments[i - 1] = (segments[i - 1][0], e)
            elif i + 1 < len(segments) and abs(segments[i + 1][0] - e) < 1e-9:
                segments[i + 1] = (s, segments[i + 1][1])
            del segments[i], residual[i]
            changed = True
            break
    return replace(segs, segments=segments, residual=residual)


def estimate_gmm(stream: FeatureStream, segs: SegmentList,
                 weighting: str = "uniform") -> GmmModel:
    """Fit one diagonal Gaussian per segment.

    weighting="uniform" gives mixture weights 1/N; "duration" weights by
    segment duration. Segments with fewer than two frames raise
    DegenerateSegmentError (run merge_degenerate_segments first).
    """
    if weighting not in ("uniform", "duration"):
        raise ValueError(f"unknown weighting {weighting!r}")
    n = len(segs)
    if n == 0:
        raise DegenerateSegmentError("empty segment list")
    means = np.empty((n, stream.dims))
    variances = np.empty((n, stream.dims))
    ranges = segment_frame_ranges(segs, stream.frame_period, stream.n_frames)
    for i, (k0, k1) in enumerate(ranges):
        if k1 - k0 < 2:
            raise DegenerateSegmentError(
                f"segment {i} {segs.segments[i]} holds {k1 - k0} frames"
            )
        chunk = stream.frames[k0:k1]
        means[i] = chunk.mean(axis=0)
        variances[i] = np.maximum(chunk.var(axis=0), VARIANCE_FLOOR)
    if weighting == "duration":
        durations = segs.durations
        weights = durations / durations.sum()
    else:
        weights = np.full(n, 1.0 / n)
    return GmmModel(means=means, variances=variances, weights=weights)


def log_component_likelihoods(gmm: GmmModel, frames: np.ndarray) -> np.ndarray:
    """log a_i + log N(f_k; mu_i, Sigma_i) for every frame/component pair."""
    inv_var = 1.0 / gmm.variances
    # (f - mu)^2 / var expanded into three GEMM-friendly terms.
    sq = frames ** 2 @ inv_var.T
    cross = frames @ (gmm.means * inv_var).T
    offset = np.sum(gmm.means ** 2 * inv_var, axis=1)
    log_det = np.sum(np.log(gmm.variances), axis=1)
    mahal = sq - 2.0 * cross + offset
    return (np.log(gmm.weights)
            - 0.5 * (mahal + log_det + gmm.dims * _LOG_2PI))


def frame_posteriors(gmm: GmmModel, stream: FeatureStream) -> PosteriorMatrix:
    """Posterior of every GMM component for every frame (log-sum-exp)."""
    if stream.dims != gmm.dims:
        raise ValueError(
            f"stream dims {stream.dims} != model dims {gmm.dims}"
        )
    log_lik = log_component_likelihoods(gmm, stream.frames)
    peak = log_lik.max(axis=1, keepdims=True)
    norm = peak + np.log(np.exp(log_lik - peak).sum(axis=1, keepdims=True))
    post = np.exp(log_lik - norm)
    if not np.isfinite(post).all():
        raise FloatingPointError("non-finite posterior; check variance floor")
    post /= post.sum(axis=1, keepdims=True)
    return PosteriorMatrix(rows=post, level="frame")


def segment_posteriors(frame_post: PosteriorMatrix, segs: SegmentList,
                       frame_period: float) -> PosteriorMatrix:
    """Average frame posteriors over each segment's frames."""
    if frame_post.level != "frame":
        raise ValueError("expected frame-level posteriors")
    n_frames = frame_post.rows.shape[0]
    out = np.empty((len(segs), frame_post.n_components))
    for i, (k0, k1) in enumerate(segment_frame_ranges(segs, frame_period,
                                                      n_frames)):
        if k1 <= k0:
            raise DegenerateSegmentError(f"segment {i} covers no frames")
        out[i] = frame_post.rows[k0:k1].mean(axis=0)
    out /= out.sum(axis=1, keepdims=True)
    return PosteriorMatrix(rows=out, level="segment")
