"""RTTM serialization and speaker-error scoring."""

import numpy as np
import pytest

from ibdiar.diarization import (
    Diarization,
    DiarizationEntry,
    diarization_from_frame_labels,
    frame_labels_from_diarization,
    read_rttm,
    write_rttm,
)
from ibdiar.errors import FormatError, UndefinedScoreError
from ibdiar.scoring import compute_ser
from ibdiar.segmentation import SpeechMask


def _diar(triples, rec="m1"):
    return Diarization(
        entries=[DiarizationEntry(start=s, duration=d, speaker=name)
                 for s, d, name in triples],
        recording_id=rec,
    )


class TestRttm:
    def test_roundtrip(self, tmp_path):
        diar = _diar([(0.0, 2.5, "spk0"), (2.5, 4.75, "spk1")])
        path = tmp_path / "a.rttm"
        write_rttm(path, diar)
        back = read_rttm(path)["m1"]
        assert len(back.entries) == 2
        for got, want in zip(back.entries, diar.entries):
            assert got.start == pytest.approx(want.start, abs=1e-3)
            assert got.duration == pytest.approx(want.duration, abs=1e-3)
            assert got.speaker == want.speaker

    def test_parse_single_line(self, tmp_path):
        path = tmp_path / "s.rttm"
        path.write_text("SPEAKER m1 1 0.00 2.50 <NA> <NA> spk0 <NA> <NA>\n")
        diar = read_rttm(path)["m1"]
        assert diar.entries == [DiarizationEntry(0.0, 2.5, "spk0")]

    def test_nonpositive_duration_rejected(self, tmp_path):
        path = tmp_path / "bad.rttm"
        path.write_text("SPEAKER m1 1 0.00 0.00 <NA> <NA> spk0 <NA> <NA>\n")
        with pytest.raises(FormatError):
            read_rttm(path)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.rttm"
        path.write_text("SPEAKER m1 1 0.00\n")
        with pytest.raises(FormatError):
            read_rttm(path)

    def test_comment_lines_skipped(self, tmp_path):
        path = tmp_path / "c.rttm"
        path.write_text(";; comment\nSPEAKER m1 1 0 1 <NA> <NA> a <NA> <NA>\n")
        assert len(read_rttm(path)["m1"].entries) == 1


class TestFrameLabelConversion:
    def test_roundtrip_through_labels(self):
        mask = SpeechMask([(0.0, 2.0), (3.0, 5.0)])
        labels = np.array([0] * 100 + [1] * 100 + [1] * 50 + [0] * 150)
        diar = diarization_from_frame_labels(labels, mask, 0.01, "r")
        back = frame_labels_from_diarization(diar, mask, 0.01)
        np.testing.assert_array_equal(back, labels)

    def test_tiles_mask_exactly(self):
        mask = SpeechMask([(0.25, 2.125)])
        labels = np.zeros(187, dtype=int)
        labels[100:] = 1
        diar = diarization_from_frame_labels(labels, mask, 0.01, "r")
        assert diar.entries[0].start == 0.25
        assert diar.entries[-1].end == pytest.approx(2.125)


class TestComputeSer:
    def test_identical_hypothesis_scores_zero(self):
        ref = _diar([(0.0, 10.0, "A"), (10.0, 10.0, "B")])
        report = compute_ser(ref, ref, collar=0.0)
        assert report.ser == 0.0
        assert report.der == 0.0

    def test_relabeled_copy_scores_zero(self):
        rng = np.random.default_rng(0)
        entries, t = [], 0.0
        for _ in range(20):
            d = rng.uniform(1.0, 5.0)
            entries.append((t, d, f"spk{rng.integers(0, 4)}"))
            t += d
        ref = _diar(entries)
        hyp = ref.relabeled({"spk0": "x3", "spk1": "x2", "spk2": "x1",
                             "spk3": "x0"})
        report = compute_ser(ref, hyp, collar=0.0)
        assert report.ser == pytest.approx(0.0, abs=1e-12)

    def test_two_speaker_single_label_is_fifty_percent(self):
        ref = _diar([(0.0, 10.0, "A"), (10.0, 10.0, "B")])
        hyp = _diar([(0.0, 20.0, "only")])
        report = compute_ser(ref, hyp, collar=0.0)
        assert report.ser == pytest.approx(50.0)
        assert report.ms == 0.0
        assert report.fa == 0.0

    def test_overlap_region_missed_speaker(self):
        # 1 s where two reference speakers overlap; the hypothesis
        # covers one of them: one speaker-second missed, none wrong.
        ref = _diar([(0.0, 2.0, "A"), (1.0, 1.0, "B")])
        hyp = _diar([(0.0, 2.0, "A")])
        report = compute_ser(ref, hyp, collar=0.0)
        assert report.ms_seconds == pytest.approx(1.0)
        assert report.ser_seconds == pytest.approx(0.0)
        assert report.scored_time == pytest.approx(3.0)

    def test_false_alarm_outside_reference(self):
        ref = _diar([(0.0, 10.0, "A")])
        hyp = _diar([(0.0, 10.0, "h"), (10.0, 2.0, "h")])
        report = compute_ser(ref, hyp, collar=0.0)
        assert report.fa_seconds == pytest.approx(2.0)

    def test_collar_excludes_boundary_errors(self):
        ref = _diar([(0.0, 10.0, "A"), (10.0, 10.0, "B")])
        hyp = _diar([(0.0, 10.1, "x"), (10.1, 9.9, "y")])
        strict = compute_ser(ref, hyp, collar=0.0)
        forgiving = compute_ser(ref, hyp, collar=0.25)
        assert strict.ser_seconds == pytest.approx(0.1)
        assert forgiving.ser_seconds == 0.0

    def test_collar_monotone_in_time_components(self):
        rng = np.random.default_rng(1)
        entries, t = [], 0.0
        for i in range(30):
            d = rng.uniform(2.0, 6.0)
            entries.append((t, d, f"spk{i % 3}"))
            t += d
        ref = _diar(entries)
        jittered = [(max(0.0, s + rng.uniform(-0.2, 0.2)), d, name)
                    for s, d, name in entries]
        hyp = _diar([(s, d, name.replace("spk", "h")) for s, d, name
                     in jittered])
        previous = None
        for collar in (0.0, 0.025, 0.25):
            report = compute_ser(ref, hyp, collar=collar)
            if previous is not None:
                assert report.ser_seconds <= previous.ser_seconds + 1e-9
                assert report.ms_seconds <= previous.ms_seconds + 1e-9
                assert report.fa_seconds <= previous.fa_seconds + 1e-9
            previous = report

    def test_ser_bounded_by_hundred(self):
        ref = _diar([(0.0, 5.0, "A"), (5.0, 5.0, "B"), (10.0, 5.0, "C")])
        hyp = _diar([(0.0, 15.0, "x")])
        report = compute_ser(ref, hyp, collar=0.0)
        assert 0.0 <= report.ser <= 100.0
        assert report.der == pytest.approx(report.ser + report.ms + report.fa)

    def test_empty_reference_rejected(self):
        hyp = _diar([(0.0, 1.0, "a")])
        with pytest.raises(UndefinedScoreError):
            compute_ser(Diarization(entries=[], recording_id="m1"), hyp)

    def test_recording_id_mismatch_rejected(self):
        ref = _diar([(0.0, 1.0, "a")], rec="m1")
        hyp = _diar([(0.0, 1.0, "a")], rec="m2")
        with pytest.raises(ValueError):
            compute_ser(ref, hyp)

    def test_no_overlap_scoring_mode(self):
        ref = _diar([(0.0, 2.0, "A"), (1.0, 1.0, "B")])
        hyp = _diar([(0.0, 2.0, "A")])
        report = compute_ser(ref, hyp, collar=0.0, score_overlap=False)
        assert report.scored_time == pytest.approx(1.0)  # overlap dropped
        assert report.ms_seconds == 0.0
