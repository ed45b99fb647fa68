"""
Shared fixtures for the PETE test suite.
"""

import numpy as np
import pytest

from data.synthetic import synth_pairs, synth_vocab
from data.vocab import Vocab
from model.config import ModelConfig
from model.encoder import build_model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_vocab():
    """Vocabulary with specials, a few words and WordPiece continuations."""
    return Vocab([
        "[PAD]", "[UNK]", "[CLS]", "[SEP]",
        "hello", "world", "the", "cat", "sat", "un", "##aff", "##able", ".", ",",
    ])


@pytest.fixture
def synthetic_vocab():
    return synth_vocab(256)


@pytest.fixture
def synthetic_pairs(synthetic_vocab):
    return synth_pairs(64, synthetic_vocab, seed=0, n_topics=4)


def make_config(**overrides):
    """Small model config for tests."""
    values = dict(n_layers=1, n_heads=2, d_model=16, ffn_factor=2, vocab_size=64, max_seq_len=16, seed=0)
    values.update(overrides)
    return ModelConfig(**values)


@pytest.fixture
def config_factory():
    return make_config


@pytest.fixture
def tiny_config():
    return make_config()


@pytest.fixture
def tiny_model(tiny_config):
    return build_model(tiny_config)
