"""
Tests for checkpoint files, the checkpoint manager and run outputs.
"""

import csv

import numpy as np
import pytest

from exceptions import CheckpointError
from model.encoder import build_model
from utils.file_manager import (
    CheckpointManager, find_vocab_for, load_checkpoint, read_checkpoint, save_checkpoint, write_metrics_csv,
)


class TestCheckpointFile:

    def test_round_trip(self, tmp_path, config_factory):
        model = build_model(config_factory(n_layers=2, embedding_kind="learned"))
        path = save_checkpoint(model, tmp_path / "model.ckpt", {"step": 12})
        restored = load_checkpoint(path)
        assert restored.cfg == model.cfg
        original = model.to_dict()
        for name, array in restored.to_dict().items():
            np.testing.assert_array_equal(array, original[name])

    def test_metadata(self, tmp_path, tiny_model):
        header, state = read_checkpoint(save_checkpoint(tiny_model, tmp_path / "m.ckpt", {"step": 3}))
        assert header["metadata"] == {"step": 3}
        assert list(state) == [name for name, _ in tiny_model.named_parameters()]
        assert state["logit_scale"].shape == ()
        logit_entry = next(e for e in header["manifest"] if e["name"] == "logit_scale")
        assert logit_entry["shape"] == []

    def test_no_temp_file_left(self, tmp_path, tiny_model):
        save_checkpoint(tiny_model, tmp_path / "m.ckpt")
        assert sorted(p.name for p in tmp_path.iterdir()) == ["m.ckpt"]

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOTACKPT" + bytes(64))
        with pytest.raises(CheckpointError, match="bad magic"):
            read_checkpoint(path)

    def test_truncated(self, tmp_path, tiny_model):
        path = save_checkpoint(tiny_model, tmp_path / "m.ckpt")
        path.write_bytes(path.read_bytes()[:-20])
        with pytest.raises(CheckpointError, match="truncated"):
            read_checkpoint(path)

    def test_version_mismatch(self, tmp_path, tiny_model):
        path = save_checkpoint(tiny_model, tmp_path / "m.ckpt")
        blob = path.read_bytes().replace(b'"format_version":1', b'"format_version":9', 1)
        path.write_bytes(blob)
        with pytest.raises(CheckpointError, match="format_version 9"):
            read_checkpoint(path)

    def test_mismatched_tensor_is_named(self, tmp_path, config_factory):
        path = save_checkpoint(build_model(config_factory(d_model=16)), tmp_path / "m.ckpt")
        with pytest.raises(CheckpointError, match="first mismatched tensor"):
            load_checkpoint(path, model_config=config_factory(d_model=32))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            read_checkpoint(tmp_path / "absent.ckpt")


class TestCheckpointManager:

    def test_prunes_old_checkpoints(self, tmp_path, tiny_model):
        manager = CheckpointManager(tmp_path, keep=2)
        for step in (1, 2, 3):
            manager.save(tiny_model, step)
        remaining = sorted(p.name for p in (tmp_path / "checkpoints").iterdir())
        assert remaining == ["step_00000002.ckpt", "step_00000003.ckpt"]
        assert manager.last_good.name == "step_00000003.ckpt"

    def test_final_checkpoint(self, tmp_path, tiny_model):
        manager = CheckpointManager(tmp_path)
        path = manager.save_final(tiny_model, 10)
        assert path == tmp_path / "model.ckpt"
        assert read_checkpoint(path)[0]["metadata"] == {"step": 10}

    def test_find_vocab(self, tmp_path, tiny_model, small_vocab):
        manager = CheckpointManager(tmp_path)
        manager.save_vocab(small_vocab)
        periodic = manager.save(tiny_model, 5)
        assert find_vocab_for(periodic) == tmp_path / "vocab.txt"
        assert find_vocab_for(tmp_path / "model.ckpt") == tmp_path / "vocab.txt"

    def test_find_vocab_missing(self, tmp_path):
        assert find_vocab_for(tmp_path / "model.ckpt") is None


class TestMetricsCsv:

    def test_columns(self, tmp_path):
        rows = [
            {"step": 1, "loss": 2.5, "lr": 1e-4, "elapsed": 0.25},
            {"step": 10, "loss": 1.25, "lr": 1e-3, "elapsed": 1.5},
        ]
        with open(write_metrics_csv(tmp_path / "metrics.csv", rows), newline="") as f:
            table = list(csv.reader(f))
        assert table[0] == ["step", "loss", "lr", "elapsed_seconds"]
        assert [int(row[0]) for row in table[1:]] == [1, 10]
        assert float(table[2][1]) == 1.25
