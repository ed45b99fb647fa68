"""
Tests for run config files and flag precedence.
"""

import pytest

from exceptions import ConfigError
from utils.config_parser import convert, parse_bool, parse_config, parse_fraction, read_config_file


def _config_file(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


class TestValueParsing:

    @pytest.mark.parametrize("raw, expected", [("4", 4.0), ("0.25", 0.25), ("1/4", 0.25)])
    def test_fraction(self, raw, expected):
        assert parse_fraction(raw) == expected

    @pytest.mark.parametrize("raw, expected", [("yes", True), ("0", False), ("On", True), (False, False)])
    def test_bool(self, raw, expected):
        assert parse_bool(raw) is expected

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="d_model"):
            convert("d_model", "wide")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="colour"):
            convert("colour", "red")


class TestConfigFile:

    def test_comments_and_blank_lines(self, tmp_path):
        path = _config_file(tmp_path, "# model\nd_model = 64\n\nn_layers=2  # two\nffn_factor = 1/4\n")
        assert read_config_file(path) == {"d_model": 64, "n_layers": 2, "ffn_factor": 0.25}

    def test_missing_equals_sign(self, tmp_path):
        with pytest.raises(ConfigError, match="run.cfg:2"):
            read_config_file(_config_file(tmp_path, "d_model=64\nn_layers 2\n"))

    def test_unknown_key_in_file(self, tmp_path):
        with pytest.raises(ConfigError, match="colour"):
            read_config_file(_config_file(tmp_path, "colour=red\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            read_config_file(tmp_path / "absent.cfg")


class TestParseConfig:

    def test_defaults(self):
        run = parse_config()
        assert run.model.d_model == 256
        assert run.model.vocab_size == 30522
        assert run.train.batch_size == 128
        assert run.train.peak_lr == pytest.approx(2e-5)
        assert run.threads >= 1

    def test_flags_override_file(self, tmp_path):
        path = _config_file(tmp_path, "d_model=64\nn_layers=2\nbatch_size=16\n")
        run = parse_config(path, {"d_model": "32"})
        assert run.model.d_model == 32
        assert run.model.n_layers == 2
        assert run.train.batch_size == 16
        assert run.explicit == {"d_model", "n_layers", "batch_size"}

    def test_seed_reaches_model_and_training(self):
        run = parse_config(overrides={"seed": "7"})
        assert run.model.seed == 7 and run.train.seed == 7

    def test_fourier_with_dropout(self):
        with pytest.raises(ConfigError, match="dropout"):
            parse_config(overrides={"dropout_p": "0.1"})

    def test_learned_with_dropout(self):
        run = parse_config(overrides={"embedding_kind": "learned", "dropout_p": "0.2"})
        assert run.model.dropout_p == pytest.approx(0.2)

    def test_invalid_model(self):
        with pytest.raises(ConfigError):
            parse_config(overrides={"d_model": "10", "n_heads": "4"})

    def test_train_needs_data(self, tmp_path):
        with pytest.raises(ConfigError, match="vocab"):
            parse_config(overrides={"out_dir": str(tmp_path)}, command="train")

    def test_train_with_synthetic_data(self, tmp_path):
        out_dir = tmp_path / "run"
        run = parse_config(overrides={"out_dir": str(out_dir), "synthetic_pairs": "64"}, command="train")
        assert run.synthetic_pairs == 64
        assert out_dir.is_dir()

    def test_missing_path(self, tmp_path):
        with pytest.raises(ConfigError, match="sts_path"):
            parse_config(overrides={"sts_path": str(tmp_path / "absent.tsv")})

    def test_with_vocab_size(self):
        run = parse_config(overrides={"d_model": "32"}).with_vocab_size(100)
        assert run.model.vocab_size == 100
        assert run.model.d_model == 32
