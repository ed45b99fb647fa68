"""
PETE - Synthetic Corpus
-----------------------
This module generates a topic-separable paired corpus for desk-scale runs.

Content tokens are shuffled and partitioned into one disjoint pool per topic.
Both sentences of a pair draw from their topic's pool: sentence b is a
shuffled copy of sentence a with a few tokens replaced by other pool tokens.
"""

import logging

import numpy as np

import config
from data.datasets import SentencePair
from data.tokenizer import tokenize
from data.vocab import Vocab, DEFAULT_SPECIALS
from exceptions import DataError

logger = logging.getLogger(__name__)


def synth_vocab(n_tokens=config.SYNTH_VOCAB_TOKENS):
    """Vocabulary of the four specials followed by w0000, w0001, ..."""
    specials = [DEFAULT_SPECIALS[role] for role in ("pad", "unk", "cls", "sep")]
    return Vocab(specials + [f"w{i:04d}" for i in range(n_tokens)])


def topic_pools(vocab, n_topics, seed):
    """Split the non-special ids of vocab into n_topics disjoint pools."""
    special_ids = {vocab.pad_id, vocab.unk_id, vocab.cls_id, vocab.sep_id}
    content = np.array([i for i in range(vocab.size) if i not in special_ids], dtype=np.int64)
    rng = np.random.default_rng(seed)
    content = rng.permutation(content)
    return np.array_split(content, n_topics)


def synth_pairs(n, vocab, seed=config.SEED, n_topics=config.SYNTH_TOPICS,
                sentence_len=config.SYNTH_SENTENCE_LEN, swaps=config.SYNTH_SWAPS):
    """Generate n matched pairs; pair i belongs to topic i % n_topics.

    Args:
        n: Number of pairs
        vocab: Vocab whose content tokens form the pools
        seed: Corpus seed
        n_topics: Number of topics (>= 2)
        sentence_len: Tokens per sentence
        swaps: Tokens of sentence a replaced in sentence b

    Returns:
        List of SentencePair
    """
    if n_topics < 2:
        raise DataError(f"n_topics must be >= 2, got {n_topics}")
    if n < 1:
        raise DataError(f"n must be positive, got {n}")
    pools = topic_pools(vocab, n_topics, seed)
    smallest = min(len(pool) for pool in pools)
    if smallest < sentence_len + swaps:
        raise DataError(
            f"Vocabulary of {vocab.size} tokens is too small: {n_topics} topics leave "
            f"{smallest} tokens per pool, need {sentence_len + swaps}"
        )

    rng = np.random.default_rng([seed, 1])
    pairs = []
    for i in range(n):
        topic = i % n_topics
        pool = pools[topic]
        chosen = rng.choice(pool, size=sentence_len + swaps, replace=False)
        words_a = chosen[:sentence_len]
        words_b = rng.permutation(words_a)
        positions = rng.choice(sentence_len, size=swaps, replace=False)
        words_b[positions] = chosen[sentence_len:]

        text_a = " ".join(vocab.tokens[t] for t in words_a)
        text_b = " ".join(vocab.tokens[t] for t in words_b)
        max_len = sentence_len + 2
        pairs.append(SentencePair(
            text_a, text_b,
            ids_a=tokenize(text_a, vocab, max_len),
            ids_b=tokenize(text_b, vocab, max_len),
            label=f"topic{topic}",
        ))

    logger.info(f"Generated {n} synthetic pairs over {n_topics} topics (seed {seed})")
    return pairs
