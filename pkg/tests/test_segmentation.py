"""Segment initialization: loaders, fixed tiling, phoneme-rate init."""

import numpy as np
import pytest

from ibdiar.errors import FormatError
from ibdiar.segmentation import (
    PhonemeBoundaryList,
    SpeechMask,
    fixed_length_init,
    frame_range,
    load_phoneme_boundaries,
    load_speech_mask,
    phoneme_counts,
    speech_frame_indices,
    varying_length_init,
    write_intervals,
)


def phones_every(step, end, start=0.0):
    edges = np.arange(start, end + step / 2, step)
    return PhonemeBoundaryList(list(zip(edges[:-1], edges[1:])))


class TestLoaders:
    def test_phonemes_two_entries(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("0.0 0.2\n0.2 0.4\n")
        phn = load_phoneme_boundaries(path)
        assert len(phn.boundaries) == 2

    def test_start_after_end(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("0.4 0.2\n")
        with pytest.raises(FormatError):
            load_phoneme_boundaries(path)

    def test_empty_file_ok(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("")
        assert load_phoneme_boundaries(path).boundaries == []

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("zero one\n")
        with pytest.raises(FormatError):
            load_phoneme_boundaries(path)

    def test_unsorted(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("1.0 1.5\n0.0 0.5\n")
        with pytest.raises(FormatError):
            load_phoneme_boundaries(path)

    def test_mask_single_region(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("0.0 10.0\n")
        assert load_speech_mask(path).intervals == [(0.0, 10.0)]

    def test_mask_overlap_rejected(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("0 5\n4 8\n")
        with pytest.raises(FormatError):
            load_speech_mask(path)

    def test_mask_two_regions(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("0 5\n6 8\n")
        assert len(load_speech_mask(path).intervals) == 2

    def test_write_read_roundtrip(self, tmp_path):
        path = tmp_path / "m.txt"
        write_intervals(path, [(0.0, 5.25), (6.125, 8.0)])
        assert load_speech_mask(path).intervals == [(0.0, 5.25), (6.125, 8.0)]


class TestFixedInit:
    def test_exact_tiling(self):
        segs = fixed_length_init(SpeechMask([(0.0, 10.0)]), 2.5)
        assert segs.segments == [(0.0, 2.5), (2.5, 5.0), (5.0, 7.5), (7.5, 10.0)]
        assert segs.residual == [False] * 4

    def test_residual(self):
        segs = fixed_length_init(SpeechMask([(0.0, 6.0)]), 2.5)
        assert segs.segments == [(0.0, 2.5), (2.5, 5.0), (5.0, 6.0)]
        assert segs.residual == [False, False, True]

    def test_per_region(self):
        segs = fixed_length_init(SpeechMask([(0.0, 3.0), (10.0, 12.0)]), 2.5)
        assert segs.segments == [(0.0, 2.5), (2.5, 3.0), (10.0, 12.0)]


class TestVaryingInit:
    def test_moderate_rate_trace(self):
        # 0.2 s phonemes: 10 in the 2 s floor, 13 more reach 4.6 s.
        segs = varying_length_init(SpeechMask([(0.0, 10.0)]),
                                   phones_every(0.2, 10.0), 2, 5, 23)
        expected = [(0.0, 4.6), (4.6, 9.2), (9.2, 10.0)]
        assert len(segs) == 3
        for got, want in zip(segs.segments, expected):
            np.testing.assert_allclose(got, want, atol=1e-9)
        assert segs.residual == [False, False, True]

    def test_fast_speech_clamps_to_min_len(self):
        segs = varying_length_init(SpeechMask([(0.0, 10.0)]),
                                   phones_every(0.05, 10.0), 2, 5, 23)
        np.testing.assert_allclose(segs.segments[0], (0.0, 2.0), atol=1e-9)

    def test_slow_speech_clamps_to_max_len(self):
        segs = varying_length_init(SpeechMask([(0.0, 10.0)]),
                                   phones_every(0.5, 10.0), 2, 5, 23)
        np.testing.assert_allclose(segs.segments[0], (0.0, 5.0), atol=1e-9)

    def test_no_phonemes_degenerates_to_max_len_tiling(self):
        segs = varying_length_init(SpeechMask([(0.0, 12.0)]),
                                   PhonemeBoundaryList([]), 2, 5, 23)
        np.testing.assert_allclose(
            segs.segments, [(0.0, 5.0), (5.0, 10.0), (10.0, 12.0)], atol=1e-9)

    def test_region_shorter_than_min_len(self):
        segs = varying_length_init(SpeechMask([(0.0, 1.0)]),
                                   phones_every(0.1, 1.0), 2, 5, 23)
        assert segs.segments == [(0.0, 1.0)]
        assert segs.residual == [True]

    def test_tiling_and_bounds_properties(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n_regions = rng.integers(1, 4)
            regions, cursor = [], 0.0
            for _ in range(n_regions):
                cursor += rng.uniform(0.0, 3.0)
                length = rng.uniform(0.5, 40.0)
                regions.append((cursor, cursor + length))
                cursor += length
            boundaries, t = [], 0.0
            while t < cursor:
                step = rng.uniform(0.02, 0.5)
                boundaries.append((t, t + step))
                t += step
            mask = SpeechMask(regions)
            segs = varying_length_init(mask, PhonemeBoundaryList(boundaries),
                                       2.0, 5.0, 23)
            # Exact tiling of every region.
            pos = 0
            for start, end in regions:
                assert abs(segs.segments[pos][0] - start) < 1e-9
                while segs.segments[pos][1] < end - 1e-9:
                    nxt = segs.segments[pos + 1]
                    assert abs(segs.segments[pos][1] - nxt[0]) < 1e-9
                    pos += 1
                assert abs(segs.segments[pos][1] - end) < 1e-9
                pos += 1
            assert pos == len(segs)
            # Length bounds for non-residual segments.
            for (s, e), res in zip(segs.segments, segs.residual):
                if not res:
                    assert 2.0 - 1e-9 <= e - s <= 5.0 + 1e-9

    def test_rate_concentration(self):
        # Heterogeneous speaking rates: varying init concentrates
        # per-segment phoneme counts relative to fixed tiling.
        rng = np.random.default_rng(7)
        wins = 0
        for _ in range(25):
            boundaries, t = [], 0.0
            while t < 120.0:
                rate = rng.uniform(4.0, 25.0)
                block_end = min(t + rng.uniform(5.0, 15.0), 120.0)
                while t + 1.0 / rate <= block_end:
                    boundaries.append((t, t + 1.0 / rate))
                    t += 1.0 / rate
                t = block_end
            mask = SpeechMask([(0.0, 120.0)])
            phn = PhonemeBoundaryList(boundaries)
            var_counts = phoneme_counts(
                varying_length_init(mask, phn, 2.0, 5.0, 23), phn)
            fix_counts = phoneme_counts(fixed_length_init(mask, 2.5), phn)
            if np.var(var_counts) <= np.var(fix_counts):
                wins += 1
        assert wins >= 24

    def test_deterministic(self):
        mask = SpeechMask([(0.0, 30.0)])
        phn = phones_every(0.13, 30.0)
        first = varying_length_init(mask, phn, 2, 5, 23)
        second = varying_length_init(mask, phn, 2, 5, 23)
        assert first.segments == second.segments

    def test_param_validation(self):
        mask = SpeechMask([(0.0, 10.0)])
        with pytest.raises(ValueError):
            varying_length_init(mask, PhonemeBoundaryList([]), 5, 2, 23)
        with pytest.raises(ValueError):
            varying_length_init(mask, PhonemeBoundaryList([]), 2, 5, 0)


class TestCsvExport:
    def test_segment_csv(self, tmp_path):
        segs = fixed_length_init(SpeechMask([(0.0, 6.0)]), 2.5)
        path = tmp_path / "segs.csv"
        segs.write_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "start,end"
        assert len(lines) == len(segs) + 1


class TestFrameIndexing:
    def test_frame_range_boundaries(self):
        assert frame_range(0.0, 2.5, 0.01) == (0, 250)
        assert frame_range(2.5, 5.0, 0.01) == (250, 500)

    def test_contiguous_segments_partition_frames(self):
        segs = fixed_length_init(SpeechMask([(0.0, 10.0)]), 2.5)
        ranges = [frame_range(s, e, 0.01) for s, e in segs.segments]
        for (_, prev_end), (next_start, _) in zip(ranges[:-1], ranges[1:]):
            assert prev_end == next_start

    def test_speech_frame_indices_cover_mask_only(self):
        mask = SpeechMask([(0.0, 1.0), (2.0, 3.0)])
        idx = speech_frame_indices(mask, 0.01, 400)
        assert idx.min() == 0
        assert 150 not in idx
        assert len(idx) == 200
