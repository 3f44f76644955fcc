"""Speaker error rate scoring with optimal label mapping and collar.

The timeline is cut into regions that are homogeneous in both reference
and hypothesis speaker sets; regions within the collar of a reference
boundary are excluded; a one-to-one speaker mapping maximizing
correctly attributed time is found with an assignment solver; missed,
false-alarm, and speaker-error time accrue region by region.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .diarization import Diarization
from .errors import UndefinedScoreError


@dataclass
class ScoreReport:
    ser: float                    # percentages of scored reference time
    ms: float
    fa: float
    der: float
    mapping: dict[str, str]       # hypothesis label -> reference label
    scored_time: float            # sum of region duration * n_ref_speakers
    ser_seconds: float
    ms_seconds: float
    fa_seconds: float
    collar: float

    def as_dict(self) -> dict:
        return {
            "ser": self.ser, "ms": self.ms, "fa": self.fa, "der": self.der,
            "mapping": self.mapping, "scored_time": self.scored_time,
            "ser_seconds": self.ser_seconds, "ms_seconds": self.ms_seconds,
            "fa_seconds": self.fa_seconds, "collar": self.collar,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as handle:
            json.dump(self.as_dict(), handle, indent=2)

    def table(self) -> str:
        rows = [("missed speech", self.ms), ("false alarm", self.fa),
                ("speaker error", self.ser), ("diarization error", self.der)]
        width = max(len(name) for name, _ in rows)
        lines = [f"{name:<{width}}  {value:6.2f} %" for name, value in rows]
        lines.append(f"{'scored time':<{width}}  {self.scored_time:6.2f} s")
        return "\n".join(lines)


def _regions(ref: Diarization, hyp: Diarization, collar: float):
    """Atomic regions (start, end, ref_speaker_set, hyp_speaker_set,
    excluded) covering the union of both diarizations."""
    cuts = set()
    for entry in ref.entries + hyp.entries:
        cuts.add(entry.start)
        cuts.add(entry.end)
    exclusion: list[tuple[float, float]] = []
    if collar > 0:
        for entry in ref.entries:
            for b in (entry.start, entry.end):
                cuts.add(b - collar)
                cuts.add(b + collar)
                exclusion.append((b - collar, b + collar))
    points = sorted(cuts)
    regions = []
    for lo, hi in zip(points[:-1], points[1:]):
        if hi - lo <= 0:
            continue
        mid = 0.5 * (lo + hi)
        ref_active = frozenset(
            e.speaker for e in ref.entries if e.start <= mid < e.end
        )
        hyp_active = frozenset(
            e.speaker for e in hyp.entries if e.start <= mid < e.end
        )
        if not ref_active and not hyp_active:
            continue
        excluded = any(lo_c < mid < hi_c for lo_c, hi_c in exclusion)
        regions.append((lo, hi, ref_active, hyp_active, excluded))
    return regions


def optimal_mapping(ref: Diarization, hyp: Diarization,
                    regions=None, collar: float = 0.0) -> dict[str, str]:
    """One-to-one hypothesis-to-reference mapping maximizing correctly
    attributed time over the scored regions."""
    if regions is None:
        regions = _regions(ref, hyp, collar)
    ref_labels = ref.speakers
    hyp_labels = hyp.speakers
    overlap = np.zeros((len(hyp_labels), len(ref_labels)))
    ref_idx = {label: i for i, label in enumerate(ref_labels)}
    hyp_idx = {label: i for i, label in enumerate(hyp_labels)}
    for lo, hi, ref_active, hyp_active, excluded in regions:
        if excluded:
            continue
        for h in hyp_active:
            for r in ref_active:
                overlap[hyp_idx[h], ref_idx[r]] += hi - lo
    rows, cols = linear_sum_assignment(-overlap)
    return {
        hyp_labels[h]: ref_labels[r]
        for h, r in zip(rows, cols)
        if overlap[h, r] > 0
    }


def compute_ser(ref: Diarization, hyp: Diarization, collar: float = 0.025,
                score_overlap: bool = True) -> ScoreReport:
    """Score a hypothesis against a reference.

    Region errors: with n_r reference speakers, n_h hypothesis speakers
    and n_c correctly mapped matches, a region of length d contributes
    d*(min(n_r, n_h) - n_c) speaker error, d*max(0, n_r - n_h) miss and
    d*max(0, n_h - n_r) false alarm; percentages are of total scored
    reference speaker time. score_overlap=False drops regions with more
    than one reference speaker instead of scoring them.
    """
    if ref.recording_id != hyp.recording_id:
        raise ValueError(
            f"recording ids differ: {ref.recording_id!r} vs {hyp.recording_id!r}"
        )
    if not ref.entries:
        raise UndefinedScoreError("reference diarization is empty")
    regions = _regions(ref, hyp, collar)
    mapping = optimal_mapping(ref, hyp, regions=regions)

    ser_t = ms_t = fa_t = scored = 0.0
    for lo, hi, ref_active, hyp_active, excluded in regions:
        if excluded:
            continue
        if not score_overlap and len(ref_active) > 1:
            continue
        d = hi - lo
        mapped = {mapping.get(h) for h in hyp_active} - {None}
        n_ref, n_hyp = len(ref_active), len(hyp_active)
        n_correct = len(mapped & ref_active)
        ser_t += d * (min(n_ref, n_hyp) - n_correct)
        ms_t += d * max(0, n_ref - n_hyp)
        fa_t += d * max(0, n_hyp - n_ref)
        scored += d * n_ref
    if scored <= 0:
        raise UndefinedScoreError("no scored reference time (all excluded)")
    ser = 100.0 * ser_t / scored
    ms = 100.0 * ms_t / scored
    fa = 100.0 * fa_t / scored
    return ScoreReport(ser=ser, ms=ms, fa=fa, der=ser + ms + fa,
                       mapping=mapping, scored_time=scored,
                       ser_seconds=ser_t, ms_seconds=ms_t, fa_seconds=fa_t,
                       collar=collar)
