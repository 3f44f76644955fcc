"""Speech masks, phoneme boundaries, and initial segment lists.

Segments tile each speech region exactly. The varying-length initializer
walks a region left to right, closing each segment at the phoneme end
time that brings its phoneme count to ``phn_rate``, clamped to
``[min_len, max_len]``; whatever is left at the end of a region becomes
a residual segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError

#: Tolerance used when comparing boundary times, so that values that are
#: equal up to float rounding (e.g. 10 * 0.2 vs 2.0) land on the same side.
BOUNDARY_EPS = 1e-9


@dataclass
class SpeechMask:
    """Ordered, disjoint speech intervals in seconds."""

    intervals: list[tuple[float, float]]

    def __post_init__(self):
        _check_intervals(self.intervals, disjoint=True, what="speech mask")

    @property
    def total_speech(self) -> float:
        return sum(e - s for s, e in self.intervals)


@dataclass
class PhonemeBoundaryList:
    """Phoneme (start, end) pairs; only the end times are consumed."""

    boundaries: list[tuple[float, float]]

    def __post_init__(self):
        _check_intervals(self.boundaries, disjoint=True, what="phoneme list")

    @property
    def end_times(self) -> np.ndarray:
        return np.array([e for _, e in self.boundaries], dtype=np.float64)


@dataclass
class SegmentList:
    """Candidate speaker-homogeneous segments covering the speech mask.

    ``residual`` flags the leftover segment closing each speech region;
    every non-residual varying segment has length in [min_len, max_len].
    """

    segments: list[tuple[float, float]]
    kind: str  # "fixed" | "varying"
    residual: list[bool] = field(default_factory=list)
    fixed_len: float | None = None
    min_len: float | None = None
    max_len: float | None = None
    phn_rate: int | None = None

    def __post_init__(self):
        if self.kind not in ("fixed", "varying"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if not self.residual:
            self.residual = [False] * len(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def durations(self) -> np.ndarray:
        return np.array([e - s for s, e in self.segments], dtype=np.float64)

    def write_csv(self, path) -> None:
        with open(path, "w") as handle:
            handle.write("start,end\n")
            for s, e in self.segments:
                handle.write(f"{s:.6f},{e:.6f}\n")


def _check_intervals(intervals, disjoint: bool, what: str) -> None:
    prev_end = None
    for start, end in intervals:
        if start >= end:
            raise FormatError(f"{what}: interval ({start}, {end}) has start >= end")
        if prev_end is not None and start < prev_end - BOUNDARY_EPS:
            if disjoint:
                raise FormatError(f"{what}: intervals overlap or are unsorted")
        prev_end = end


def _load_intervals(path, what: str) -> list[tuple[float, float]]:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'start end', got {line!r}")
        try:
            start, end = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-numeric value") from exc
        if start >= end:
            raise FormatError(f"{path}:{lineno}: start {start} >= end {end}")
        if pairs and start < pairs[-1][0]:
            raise FormatError(f"{path}:{lineno}: {what} not sorted by start time")
        pairs.append((start, end))
    return pairs


def load_speech_mask(path) -> SpeechMask:
    return SpeechMask(_load_intervals(path, "speech mask"))


def load_phoneme_boundaries(path) -> PhonemeBoundaryList:
    return PhonemeBoundaryList(_load_intervals(path, "phoneme boundaries"))


def write_intervals(path, intervals) -> None:
    with open(path, "w") as handle:
        for start, end in intervals:
            handle.write(f"{start:.3f} {end:.3f}\n")


def fixed_length_init(mask: SpeechMask, fixed_len: float = 2.5) -> SegmentList:
    """Tile each speech region with fixed_len segments, keeping the
    shorter leftover at the region end as a residual segment."""
    if fixed_len <= 0:
        raise ValueError("fixed_len must be positive")
    segments, residual = [], []
    for start, end in mask.intervals:
        t = start
        while end - t > fixed_len + BOUNDARY_EPS:
            segments.append((t, t + fixed_len))
            residual.append(False)
            t += fixed_len
        segments.append((t, end))
        residual.append(end - t < fixed_len - BOUNDARY_EPS)
    return SegmentList(segments, kind="fixed", residual=residual,
                       fixed_len=fixed_len)


def varying_length_init(mask: SpeechMask, phonemes: PhonemeBoundaryList,
                        min_len: float = 2.0, max_len: float = 5.0,
                        phn_rate: int = 23) -> SegmentList:
    """Phoneme-rate segment initialization, run independently per region.

    A phoneme belongs to window (t1, t2] iff its end time does; segment
    boundaries therefore coincide with phoneme end times. Windows with
    no phoneme ends fall back to max_len tiling (clamped to the region).
    """
    if not 0 < min_len <= max_len:
        raise ValueError("need 0 < min_len <= max_len")
    if phn_rate < 1:
        raise ValueError("phn_rate must be >= 1")
    all_ends = phonemes.end_times
    segments, residual = [], []

    for region_start, region_end in mask.intervals:
        lo = np.searchsorted(all_ends, region_start + BOUNDARY_EPS)
        hi = np.searchsorted(all_ends, region_end + BOUNDARY_EPS)
        ends = all_ends[lo:hi]

        ptr = region_start
        while ptr < region_end - BOUNDARY_EPS:
            start = ptr
            end = ptr + min_len
            if end >= region_end - BOUNDARY_EPS:
                segments.append((start, region_end))
                residual.append(True)
                break
            n_a = _count_in(ends, start, end)
            if n_a >= phn_rate:
                segments.append((start, end))
                residual.append(False)
                ptr = end
                continue
            list_b = _slice_in(ends, end, start + max_len)
            if n_a + len(list_b) <= phn_rate:
                end = float(list_b[-1]) if len(list_b) else min(start + max_len,
                                                                region_end)
            else:
                end = float(list_b[phn_rate - n_a - 1])
            segments.append((start, end))
            residual.append(False)
            ptr = end

    return SegmentList(segments, kind="varying", residual=residual,
                       min_len=min_len, max_len=max_len, phn_rate=phn_rate)


def _count_in(ends: np.ndarray, t1: float, t2: float) -> int:
    """Number of phoneme end times in (t1, t2], boundary-tolerant."""
    lo = np.searchsorted(ends, t1 + BOUNDARY_EPS)
    hi = np.searchsorted(ends, t2 + BOUNDARY_EPS)
    return int(hi - lo)


def _slice_in(ends: np.ndarray, t1: float, t2: float) -> np.ndarray:
    lo = np.searchsorted(ends, t1 + BOUNDARY_EPS)
    hi = np.searchsorted(ends, t2 + BOUNDARY_EPS)
    return ends[lo:hi]


def phoneme_counts(segs: SegmentList, phonemes: PhonemeBoundaryList,
                   non_residual_only: bool = True) -> np.ndarray:
    """Per-segment phoneme counts (by end time), for rate analyses."""
    ends = phonemes.end_times
    counts = []
    for (start, end), res in zip(segs.segments, segs.residual):
        if non_residual_only and res:
            continue
        counts.append(_count_in(ends, start, end))
    return np.array(counts, dtype=np.int64)


def frame_range(start: float, end: float, frame_period: float) -> tuple[int, int]:
    """Half-open frame-index range owned by [start, end): frame k belongs
    iff its start time k*frame_period lies in the interval."""
    k0 = int(np.ceil(start / frame_period - 1e-6))
    k1 = int(np.ceil(end / frame_period - 1e-6))
    return max(k0, 0), max(k1, k0)


def speech_frame_indices(mask: SpeechMask, frame_period: float,
                         n_frames: int) -> np.ndarray:
    """Indices of frames whose start time falls inside the speech mask."""
    chunks = []
    for start, end in mask.intervals:
        k0, k1 = frame_range(start, end, frame_period)
        k1 = min(k1, n_frames)
        if k1 > k0:
            chunks.append(np.arange(k0, k1))
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)
