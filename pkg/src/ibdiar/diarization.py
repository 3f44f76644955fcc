"""Time-stamped speaker-labeled intervals and RTTM serialization."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError
from .segmentation import SpeechMask, frame_range

_RTTM_FIELDS = 10


@dataclass(frozen=True)
class DiarizationEntry:
    start: float
    duration: float
    speaker: str

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass
class Diarization:
    """Hypothesis or reference speaker intervals for one recording."""

    entries: list[DiarizationEntry]
    recording_id: str = ""

    def __post_init__(self):
        for entry in self.entries:
            if entry.duration <= 0:
                raise FormatError(
                    f"entry at {entry.start} has non-positive duration"
                )
        self.entries = sorted(self.entries, key=lambda e: (e.start, e.speaker))

    @property
    def speakers(self) -> list[str]:
        seen: dict[str, None] = {}
        for entry in self.entries:
            seen.setdefault(entry.speaker, None)
        return list(seen)

    def total_by_speaker(self) -> dict[str, float]:
        totals: dict[str, float] = {}
        for entry in self.entries:
            totals[entry.speaker] = totals.get(entry.speaker, 0.0) + entry.duration
        return totals

    def relabeled(self, mapping: dict[str, str]) -> "Diarization":
        return Diarization(
            entries=[
                DiarizationEntry(e.start, e.duration, mapping.get(e.speaker, e.speaker))
                for e in self.entries
            ],
            recording_id=self.recording_id,
        )


def write_rttm(path, diarizations) -> None:
    """Write one or more diarizations in NIST RTTM form (1 ms precision)."""
    if isinstance(diarizations, Diarization):
        diarizations = [diarizations]
    with open(path, "w") as handle:
        for diar in diarizations:
            for entry in diar.entries:
                handle.write(
                    f"SPEAKER {diar.recording_id} 1 {entry.start:.3f} "
                    f"{entry.duration:.3f} <NA> <NA> {entry.speaker} <NA> <NA>\n"
                )


def read_rttm(path) -> dict[str, Diarization]:
    """Parse an RTTM file, grouped by recording id."""
    grouped: dict[str, list[DiarizationEntry]] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith(";;"):
            continue
        parts = line.split()
        if len(parts) != _RTTM_FIELDS or parts[0] != "SPEAKER":
            raise FormatError(f"{path}:{lineno}: malformed RTTM line")
        try:
            start, duration = float(parts[3]), float(parts[4])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-numeric time field") from exc
        if duration <= 0:
            raise FormatError(f"{path}:{lineno}: non-positive duration")
        grouped.setdefault(parts[1], []).append(
            DiarizationEntry(start=start, duration=duration, speaker=parts[7])
        )
    return {
        rec: Diarization(entries=entries, recording_id=rec)
        for rec, entries in grouped.items()
    }


def diarization_from_frame_labels(labels: np.ndarray, mask: SpeechMask,
                                  frame_period: float,
                                  recording_id: str = "") -> Diarization:
    """Turn per-speech-frame labels into mask-tiling intervals.

    ``labels`` has one entry per speech frame (mask order). Runs are cut
    at speech-region edges; interior boundaries land on frame starts,
    region edges on the exact mask times, so the output tiles the mask.
    """
    entries = []
    pos = 0
    for region_start, region_end in mask.intervals:
        k0, k1 = frame_range(region_start, region_end, frame_period)
        count = k1 - k0
        region_labels = labels[pos:pos + count]
        pos += count
        if count == 0:
            continue
        run_starts = [0] + list(np.flatnonzero(np.diff(region_labels)) + 1)
        run_starts.append(count)
        for a, b in zip(run_starts[:-1], run_starts[1:]):
            t0 = region_start if a == 0 else (k0 + a) * frame_period
            t1 = region_end if b == count else (k0 + b) * frame_period
            entries.append(
                DiarizationEntry(start=t0, duration=t1 - t0,
                                 speaker=f"spk{int(region_labels[a])}")
            )
    return Diarization(entries=entries, recording_id=recording_id)


def frame_labels_from_diarization(diar: Diarization, mask: SpeechMask,
                                  frame_period: float) -> np.ndarray:
    """Integer label per speech frame; speakers numbered by first
    appearance in the entry list. Frames not covered by any entry get -1."""
    order: dict[str, int] = {}
    for entry in diar.entries:
        order.setdefault(entry.speaker, len(order))
    total = sum(
        frame_range(s, e, frame_period)[1] - frame_range(s, e, frame_period)[0]
        for s, e in mask.intervals
    )
    labels = np.full(total, -1, dtype=np.int64)
    pos = 0
    for region_start, region_end in mask.intervals:
        k0, k1 = frame_range(region_start, region_end, frame_period)
        for entry in diar.entries:
            lo, hi = frame_range(max(entry.start, region_start),
                                 min(entry.end, region_end), frame_period)
            lo, hi = max(lo, k0), min(hi, k1)
            if hi > lo:
                labels[pos + (lo - k0):pos + (hi - k0)] = order[entry.speaker]
        pos += k1 - k0
    return labels
