"""
PETE - Tokenizer
----------------
This module implements BERT-uncased style tokenization: lowercase, strip
accents, split on whitespace and punctuation, then greedy longest-match
WordPiece with "##" continuation pieces.
"""

import unicodedata
import logging

import config

logger = logging.getLogger(__name__)

CONTINUATION_PREFIX = "##"


def _is_punctuation(char):
    cp = ord(char)
    # All non-alphanumeric ASCII counts as punctuation
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(char).startswith("P")


def _strip_accents(text):
    text = unicodedata.normalize("NFD", text)
    return "".join(char for char in text if unicodedata.category(char) != "Mn")


def basic_split(text):
    """Lowercase, strip accents and split into words and punctuation marks."""
    text = _strip_accents(text.lower())
    words = []
    for chunk in text.split():
        current = []
        for char in chunk:
            if _is_punctuation(char):
                if current:
                    words.append("".join(current))
                    current = []
                words.append(char)
            elif unicodedata.category(char) not in ("Cc", "Cf"):
                current.append(char)
        if current:
            words.append("".join(current))
    return words


def wordpiece(word, vocab, max_chars=config.MAX_WORD_CHARS):
    """Greedy longest-match split of one word into vocabulary ids.

    Args:
        word: Lowercased word without whitespace
        vocab: Vocab
        max_chars: Longer words map to unk

    Returns:
        List of token ids ([unk] when no full segmentation exists)
    """
    if len(word) > max_chars:
        return [vocab.unk_id]
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = CONTINUATION_PREFIX + candidate
            if candidate in vocab.token_to_id:
                match = vocab.token_to_id[candidate]
                break
            end -= 1
        if match is None:
            return [vocab.unk_id]
        pieces.append(match)
        start = end
    return pieces


def tokenize(text, vocab, max_len=config.MAX_SEQ_LEN):
    """Tokenize text into ids framed as [CLS] ... [SEP].

    Args:
        text: Input string
        vocab: Vocab
        max_len: Maximum sequence length including the frame (>= 3)

    Returns:
        List of token ids; truncation keeps the closing [SEP]
    """
    if max_len < 3:
        raise ValueError(f"max_len must be >= 3, got {max_len}")
    ids = []
    for word in basic_split(text):
        ids.extend(wordpiece(word, vocab))

    if not vocab.frames:
        return ids[:max_len]
    ids = ids[: max_len - 2]
    return [vocab.cls_id] + ids + [vocab.sep_id]
