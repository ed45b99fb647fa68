"""
PETE - Batching
---------------
This module shuffles sentence pairs deterministically and packs them into
padded batches with validity masks.
"""

import logging
from dataclasses import dataclass

import numpy as np

import config
from exceptions import ConfigError, DataError

logger = logging.getLogger(__name__)


@dataclass
class Batch:
    """Padded id matrices [B, S] for both sides with masks and optional scores."""

    ids_a: np.ndarray
    mask_a: np.ndarray
    ids_b: np.ndarray
    mask_b: np.ndarray
    scores: np.ndarray = None

    @property
    def size(self):
        return self.ids_a.shape[0]

    @property
    def real_tokens(self):
        return int(self.mask_a.sum() + self.mask_b.sum())


def pad_sequences(sequences, pad_id, length=None, max_len=None):
    """Pad id lists into an int64 matrix and a {0,1} mask.

    Args:
        sequences: List of id lists
        pad_id: Padding id
        length: Width of the output (defaults to the longest sequence)
        max_len: Optional truncation length

    Returns:
        (ids [B, S], mask [B, S])
    """
    if max_len is not None:
        sequences = [list(seq)[:max_len] for seq in sequences]
    for row, seq in enumerate(sequences):
        if len(seq) == 0:
            raise DataError(f"Row {row} has an empty tokenization")
    width = length or max(len(seq) for seq in sequences)
    ids = np.full((len(sequences), width), pad_id, dtype=np.int64)
    mask = np.zeros((len(sequences), width), dtype=np.int64)
    for row, seq in enumerate(sequences):
        ids[row, : len(seq)] = seq
        mask[row, : len(seq)] = 1
    return ids, mask


def truncate_ids(ids, max_len, sep_id=None):
    """Cut an id sequence to max_len, keeping a closing [SEP] in the last slot."""
    ids = list(ids)
    if len(ids) <= max_len:
        return ids
    if sep_id is not None and ids[-1] == sep_id:
        return ids[: max_len - 1] + [sep_id]
    return ids[:max_len]


def collate(pairs, pad_id, max_len=config.MAX_SEQ_LEN, offset=0, sep_id=None):
    """Pack pairs into one Batch padded to the longest side.

    Args:
        pairs: List of SentencePair
        pad_id: Padding id
        max_len: Truncation length
        offset: Index of the first pair in its source list, for diagnostics
        sep_id: Closing frame id kept by truncation (None for unframed ids)

    Returns:
        Batch
    """
    for row, pair in enumerate(pairs):
        if not pair.ids_a or not pair.ids_b:
            raise DataError(f"Pair {offset + row} ({pair.text_a!r}, {pair.text_b!r}) has an empty tokenization")
    seq_a = [truncate_ids(p.ids_a, max_len, sep_id) for p in pairs]
    seq_b = [truncate_ids(p.ids_b, max_len, sep_id) for p in pairs]
    width = max(len(s) for s in seq_a + seq_b)
    ids_a, mask_a = pad_sequences(seq_a, pad_id, width)
    ids_b, mask_b = pad_sequences(seq_b, pad_id, width)

    # Padding never aliases a real token position
    mask_a[ids_a == pad_id] = 0
    mask_b[ids_b == pad_id] = 0
    for mask in (mask_a, mask_b):
        empty = np.flatnonzero(mask.sum(axis=1) == 0)
        if empty.size:
            raise DataError(f"Pair {offset + int(empty[0])} has no non-padding tokens")

    scores = None
    if all(p.score is not None for p in pairs):
        scores = np.array([p.score for p in pairs], dtype=np.float64)
    return Batch(ids_a, mask_a, ids_b, mask_b, scores)


def make_batches(pairs, batch_size, max_len, vocab, seed):
    """Shuffle pairs by seed and cut them into full batches.

    The final partial batch is dropped.

    Args:
        pairs: List of SentencePair
        batch_size: Pairs per batch (>= 2)
        max_len: Truncation length
        vocab: Vocab supplying the pad id
        seed: Shuffle seed

    Returns:
        List of Batch
    """
    if batch_size < 2:
        raise ConfigError(f"batch_size must be >= 2, got {batch_size}")
    for row, pair in enumerate(pairs):
        if not pair.ids_a or not pair.ids_b:
            raise DataError(f"Pair {row} ({pair.text_a!r}, {pair.text_b!r}) has an empty tokenization")

    order = np.random.default_rng(seed).permutation(len(pairs))
    n_batches = len(pairs) // batch_size
    batches = []
    for b in range(n_batches):
        chosen = [pairs[i] for i in order[b * batch_size:(b + 1) * batch_size]]
        batches.append(collate(chosen, vocab.pad_id, max_len, sep_id=vocab.sep_id))
    dropped = len(pairs) - n_batches * batch_size
    logger.debug(f"Made {n_batches} batches of {batch_size} (dropped {dropped} pairs)")
    return batches


class PairDataset:
    """Matched sentence pairs that yield a fresh deterministic shuffle per epoch."""

    def __init__(self, pairs, vocab, max_len=config.MAX_SEQ_LEN):
        if not pairs:
            raise DataError("PairDataset needs at least one pair")
        self.pairs = list(pairs)
        self.vocab = vocab
        self.max_len = max_len

    def __len__(self):
        return len(self.pairs)

    def epoch_batches(self, batch_size, epoch, seed):
        """Batches for one epoch; the shuffle seed is derived from (seed, epoch)."""
        if len(self.pairs) < batch_size:
            raise DataError(f"Dataset of {len(self.pairs)} pairs is smaller than one batch of {batch_size}")
        return make_batches(self.pairs, batch_size, self.max_len, self.vocab, [seed, epoch])

    def batches(self, batch_size, seed):
        """Endless stream of batches across epochs."""
        epoch = 0
        while True:
            for batch in self.epoch_batches(batch_size, epoch, seed):
                yield batch
            epoch += 1
