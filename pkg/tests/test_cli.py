"""CLI subcommands, exit codes, and end-to-end file flow."""

import json

import numpy as np
import pytest

from ibdiar.cli import main
from ibdiar.features import write_wav


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    code = main(["synth", "--out-dir", str(out), "--num-speakers", "3",
                 "--duration", "60", "--seed", "21"])
    assert code == 0
    return out


class TestExitCodes:
    def test_var_mode_without_boundaries_is_usage_error(self, corpus_dir,
                                                        tmp_path):
        code = main([
            "diarize", "--mode", "varib",
            "--features", str(corpus_dir / "synth21.feat"),
            "--mask", str(corpus_dir / "synth21.mask"),
            "--rttm-out", str(tmp_path / "o.rttm"),
        ])
        assert code == 1

    def test_unknown_flag_is_usage_error(self):
        assert main(["score", "--nope"]) == 1

    def test_missing_file_is_data_error(self, tmp_path):
        code = main([
            "diarize", "--mode", "ib", "--features", "/nonexistent.feat",
            "--mask", "/nonexistent.mask",
            "--rttm-out", str(tmp_path / "o.rttm"),
        ])
        assert code == 2

    def test_malformed_mask_is_data_error(self, corpus_dir, tmp_path):
        bad = tmp_path / "bad.mask"
        bad.write_text("5 1\n")
        code = main([
            "diarize", "--mode", "ib",
            "--features", str(corpus_dir / "synth21.feat"),
            "--mask", str(bad),
            "--rttm-out", str(tmp_path / "o.rttm"),
        ])
        assert code == 2


class TestFlow:
    def test_features_subcommand(self, tmp_path):
        rng = np.random.default_rng(0)
        wav = tmp_path / "a.wav"
        write_wav(wav, rng.uniform(-0.3, 0.3, 32000), 16000)
        feat = tmp_path / "a.feat"
        csv = tmp_path / "a.csv"
        assert main(["features", "--wav", str(wav), "--out", str(feat),
                     "--csv", str(csv)]) == 0
        from ibdiar.features import read_features

        stream = read_features(feat)
        assert stream.n_frames == (32000 - 400) // 160 + 1
        assert csv.exists()

    def test_diarize_then_score(self, corpus_dir, tmp_path, capsys):
        rttm = tmp_path / "hyp.rttm"
        report = tmp_path / "report.json"
        code = main([
            "diarize", "--mode", "ib",
            "--features", str(corpus_dir / "synth21.feat"),
            "--mask", str(corpus_dir / "synth21.mask"),
            "--rttm-out", str(rttm), "--report-out", str(report),
            "--nmi", "0.65", "--seed", "21",
        ])
        assert code == 0
        payload = json.loads(report.read_text())
        assert payload["rtf"]["total_rtf"] < 1.0
        json_out = tmp_path / "score.json"
        code = main(["score", "--ref", str(corpus_dir / "synth21.ref.rttm"),
                     "--hyp", str(rttm), "--json", str(json_out)])
        assert code == 0
        scored = json.loads(json_out.read_text())
        assert scored["synth21"]["ser"] < 5.0
        out = capsys.readouterr().out
        assert "speaker error" in out

    def test_score_self_is_zero(self, corpus_dir, tmp_path, capsys):
        ref = str(corpus_dir / "synth21.ref.rttm")
        json_out = tmp_path / "self.json"
        assert main(["score", "--ref", ref, "--hyp", ref,
                     "--json", str(json_out)]) == 0
        assert json.loads(json_out.read_text())["synth21"]["ser"] == 0.0

    def test_seeded_cli_runs_byte_identical(self, corpus_dir, tmp_path):
        outputs = []
        for name in ("one.rttm", "two.rttm"):
            path = tmp_path / name
            code = main([
                "diarize", "--mode", "tpib-fused",
                "--features", str(corpus_dir / "synth21.feat"),
                "--mask", str(corpus_dir / "synth21.mask"),
                "--rttm-out", str(path),
                "--nmi", "0.65", "--seed", "9", "--jobs", "1",
            ])
            assert code == 0
            outputs.append(path.read_bytes())
        assert outputs[0] == outputs[1]

    def test_bench_table(self, corpus_dir, capsys):
        code = main(["bench", "--corpus", str(corpus_dir),
                     "--modes", "ib,varib", "--nmi", "0.65"])
        assert code == 0
        out = capsys.readouterr().out
        assert "rtf" in out
        assert "synth21" in out
        assert "varib" in out

    def test_bench_parallel_jobs(self, tmp_path, capsys):
        out_dir = tmp_path / "multi"
        assert main(["synth", "--out-dir", str(out_dir), "--duration", "30",
                     "--count", "2", "--seed", "40",
                     "--turn-range", "3,6"]) == 0
        code = main(["bench", "--corpus", str(out_dir), "--modes", "ib",
                     "--jobs", "2", "--nmi", "0.65"])
        assert code == 0
        out = capsys.readouterr().out
        assert "synth40" in out and "synth41" in out

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
