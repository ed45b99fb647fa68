"""
Tests for the pete command line.
"""

import csv

import pytest

from main import main

TINY_TRAIN_FLAGS = [
    "--synthetic-pairs", "64", "--synthetic-vocab", "64", "--synthetic-topics", "2",
    "--layers", "1", "--heads", "2", "--d-model", "16", "--max-len", "16",
    "--batch-size", "8", "--steps", "6", "--warmup", "2", "--lr", "1e-3",
    "--log-every", "2", "--checkpoint-every", "3", "--threads", "1",
]


class TestExitCodes:

    def test_unknown_command(self, capsys):
        assert main(["compile"]) == 1
        assert "invalid choice" in capsys.readouterr().err

    def test_missing_required_flag(self):
        assert main(["eval-sts", "--sts", "x.tsv"]) == 1

    def test_runtime_error(self, tmp_path, capsys):
        code = main(["eval-sts", "--checkpoint", str(tmp_path / "absent.ckpt"), "--sts", str(tmp_path / "x.tsv")])
        assert code == 2
        assert "pete eval-sts" in capsys.readouterr().err

    def test_bench_too_few_iterations(self):
        assert main(["bench", "--vocab-size", "100", "--d-model", "8", "--iters", "5"]) == 2

    def test_help(self):
        assert main(["--help"]) == 0


class TestParamCount:

    def test_reference_model(self, capsys):
        assert main(["param-count"]) == 0
        out = capsys.readouterr().out
        assert "total: 1,164,289 (1.16m)" in out
        assert "learned-table model at equal config: 8,928,513" in out
        assert "saving: 7,764,224" in out

    def test_learned(self, capsys):
        assert main(["param-count", "--embedding", "learned", "--d-model", "512", "--layers", "2"]) == 0
        out = capsys.readouterr().out
        assert "total: 24,280,577" in out
        assert "embedding table share" in out

    def test_config_file(self, tmp_path, capsys):
        path = tmp_path / "model.cfg"
        path.write_text("n_layers=2\nd_model=512\n", encoding="utf-8")
        assert main(["param-count", "--config", str(path)]) == 0
        assert "total: 8,850,433" in capsys.readouterr().out

    def test_fourier_dropout_conflict(self):
        assert main(["param-count", "--dropout", "0.1"]) == 2


class TestAnalysisCommands:

    def test_analyze_collisions(self, tmp_path, capsys):
        path = tmp_path / "pairs.csv"
        code = main(["analyze-collisions", "--vocab-size", "200", "--d-model", "16",
                     "--random-pairs", "100", "--csv", str(path)])
        assert code == 0
        assert "min adjacent distance" in capsys.readouterr().out
        with open(path, newline="") as f:
            assert len(list(csv.reader(f))) == 200

    def test_bench(self, tmp_path, capsys):
        path = tmp_path / "bench.csv"
        code = main(["bench", "--vocab-size", "300", "--d-model", "8", "--batch", "2", "--seq", "4",
                     "--iters", "10", "--csv", str(path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "fused" in out and "table" in out
        assert path.exists()


@pytest.fixture
def trained_run(tmp_path, capsys):
    out_dir = tmp_path / "run"
    assert main(["train", *TINY_TRAIN_FLAGS, "--out-dir", str(out_dir)]) == 0
    return out_dir


class TestTrainAndUse:

    def test_train_outputs(self, trained_run, capsys):
        out = capsys.readouterr().out
        assert "steps: 6" in out
        assert "in-batch retrieval accuracy" in out
        assert (trained_run / "model.ckpt").exists()
        assert (trained_run / "vocab.txt").exists()
        assert (trained_run / "metrics.csv").exists()
        assert list((trained_run / "logs").glob("*.log"))

    def test_eval_sts(self, trained_run, tmp_path, capsys):
        sts = tmp_path / "sts.tsv"
        sts.write_text(
            "score\tsentence1\tsentence2\n"
            "5.0\tw0001 w0002 w0003\tw0001 w0002 w0003\n"
            "3.2\tw0004 w0005\tw0004 w0006\n"
            "0.4\tw0007\tw0040 w0041\n"
            "1.5\tw0010 w0011\tw0012\n",
            encoding="utf-8",
        )
        capsys.readouterr()
        assert main(["eval-sts", "--checkpoint", str(trained_run / "model.ckpt"), "--sts", str(sts), "--json"]) == 0
        assert '"n": 4' in capsys.readouterr().out

    def test_embed(self, trained_run, capsys):
        capsys.readouterr()
        assert main(["embed", "--checkpoint", str(trained_run / "model.ckpt"), "--text", "w0001 w0002"]) == 0
        values = capsys.readouterr().out.split()
        assert len(values) == 16
        assert all(float(v) == float(v) for v in values)

    def test_embed_needs_vocab(self, trained_run, tmp_path):
        moved = tmp_path / "elsewhere" / "model.ckpt"
        moved.parent.mkdir()
        moved.write_bytes((trained_run / "model.ckpt").read_bytes())
        assert main(["embed", "--checkpoint", str(moved), "--text", "w0001"]) == 2

    def test_same_seed_gives_identical_checkpoints(self, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        assert main(["train", *TINY_TRAIN_FLAGS, "--out-dir", str(first)]) == 0
        assert main(["train", *TINY_TRAIN_FLAGS, "--out-dir", str(second)]) == 0
        assert (first / "model.ckpt").read_bytes() == (second / "model.ckpt").read_bytes()
