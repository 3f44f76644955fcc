"""Pipeline orchestration: mode dispatch, structure, determinism."""

import numpy as np
import pytest

from ibdiar.diarization import write_rttm
from ibdiar.pipeline import MODES, PipelineConfig, diarize
from ibdiar.scoring import compute_ser
from ibdiar.synth import SynthSpec, synth_conversation

#: The meeting-speech default threshold (0.4) under-clusters the
#: block-structured synthetic corpus, whose NMI trajectory plateaus
#: near 1 until speakers merge; tests use a mid-plateau threshold.
SYNTH_NMI = 0.65


@pytest.fixture(scope="module")
def small_conv():
    return synth_conversation(SynthSpec(num_speakers=3, duration=120.0,
                                        mean_radius=5.0, seed=11))


def _run(conv, mode, **overrides):
    config = PipelineConfig(mode=mode, nmi=overrides.pop("nmi", SYNTH_NMI),
                            **overrides)
    return diarize(conv.features, conv.mask, conv.phonemes, config)


def _rttm_bytes(diar, tmp_path, name):
    path = tmp_path / name
    write_rttm(path, diar)
    return path.read_bytes()


class TestModeDispatch:
    def test_single_pass_modes_realign_once(self, small_conv):
        for mode in ("ib", "varib"):
            result = _run(small_conv, mode)
            assert result.n_realignments == 1
            assert result.trajectory_second is None

    def test_nn_modes_realign_twice(self, small_conv):
        for mode in ("tpib-nn", "vartpib-nn", "tpib-fused", "vartpib-fused"):
            result = _run(small_conv, mode)
            assert result.n_realignments == 2
            assert result.trajectory_second is not None
            assert result.mfnn is not None

    def test_lda_modes_realign_once(self, small_conv):
        for mode in ("tpib-lda", "vartpib-lda"):
            result = _run(small_conv, mode)
            assert result.n_realignments == 1
            assert result.latent_lda is not None
            assert result.mfnn is None

    def test_lda_first_pass_stops_at_cluster_count(self, small_conv):
        result = _run(small_conv, "tpib-lda", first_pass_count=20)
        assert result.first_pass_n_clusters == 20

    def test_var_modes_require_phonemes(self, small_conv):
        with pytest.raises(ValueError):
            diarize(small_conv.features, small_conv.mask, None,
                    PipelineConfig(mode="varib"))

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            PipelineConfig(mode="tpib-xx")


class TestOutputs:
    def test_diarization_tiles_mask(self, small_conv):
        for mode in ("ib", "tpib-lda"):
            result = _run(small_conv, mode)
            entries = result.diarization.entries
            assert entries[0].start == 0.0
            assert entries[-1].end == pytest.approx(120.0)
            for a, b in zip(entries[:-1], entries[1:]):
                assert a.end == pytest.approx(b.start)

    def test_recovers_three_speakers(self, small_conv):
        result = _run(small_conv, "ib")
        assert result.final_n_clusters == 3
        report = compute_ser(small_conv.reference, result.diarization)
        assert report.ser < 5.0

    def test_rtf_additivity(self, small_conv):
        result = _run(small_conv, "ib")
        total = sum(s.seconds for s in result.rtf.stages)
        assert result.rtf.total_seconds == pytest.approx(total, abs=0.05)
        assert result.rtf.total_rtf == pytest.approx(
            total / small_conv.features.duration, rel=0.05)

    def test_report_dict_is_json_ready(self, small_conv):
        import json

        result = _run(small_conv, "tpib-fused")
        payload = json.dumps(result.report_dict())
        assert "trajectory_second" in payload


class TestDeterminism:
    @pytest.mark.parametrize("mode", MODES)
    def test_repeat_runs_byte_identical(self, small_conv, tmp_path, mode):
        first = _run(small_conv, mode, seed=3)
        second = _run(small_conv, mode, seed=3)
        a = _rttm_bytes(first.diarization, tmp_path, f"{mode}-a.rttm")
        b = _rttm_bytes(second.diarization, tmp_path, f"{mode}-b.rttm")
        assert a == b


class TestFusedEndpoints:
    def test_w10_matches_nn_branch(self, small_conv, tmp_path):
        nn = _run(small_conv, "vartpib-nn", seed=5)
        fused = _run(small_conv, "vartpib-fused", fusion=(1.0, 0.0), seed=5)
        assert _rttm_bytes(nn.diarization, tmp_path, "nn.rttm") == \
            _rttm_bytes(fused.diarization, tmp_path, "fused.rttm")

    def test_default_weights_follow_mode(self):
        assert PipelineConfig(mode="tpib-fused").fusion_weights.w_nn == 0.2
        assert PipelineConfig(mode="vartpib-fused").fusion_weights.w_nn == 0.6


class TestEdgeCases:
    def test_first_pass_count_clamped(self):
        conv = synth_conversation(SynthSpec(num_speakers=2, duration=40.0,
                                            turn_range=(4.0, 8.0), seed=2))
        result = _run(conv, "tpib-lda", first_pass_count=20)
        assert any("clamped" in w for w in result.warnings)
        assert result.first_pass_n_clusters <= 16

    def test_training_impossible_falls_back_to_first_pass(self, small_conv):
        result = _run(small_conv, "tpib-nn", prune_min=1e6)
        assert any("training impossible" in w for w in result.warnings)
        assert result.diarization is result.first_pass_diarization
        assert result.n_realignments == 1

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PipelineConfig(nmi=-0.1)
        with pytest.raises(ValueError):
            PipelineConfig(first_pass_count=1)

    def test_negative_control_cannot_beat_chance(self):
        # Indistinguishable speakers (zero radius, shared variances):
        # the system must do no better than random attribution, whose
        # SER is (K-1)/K. Noise is over-clustered rather than collapsed,
        # so only the lower bound is meaningful.
        chance = 100.0 * 2.0 / 3.0
        sers = []
        for seed in range(3):
            conv = synth_conversation(
                SynthSpec(num_speakers=3, duration=300.0, mean_radius=0.0,
                          variance_range=(1.0, 1.0), seed=seed))
            result = _run(conv, "ib", seed=seed)
            sers.append(compute_ser(conv.reference, result.diarization).ser)
        assert np.mean(sers) > chance - 10.0
