"""
PETE - Vocabulary
-----------------
This module loads one-token-per-line vocabulary files (line number = token id)
and resolves the special tokens.
"""

import logging
from pathlib import Path

import config
from exceptions import VocabError

logger = logging.getLogger(__name__)

REQUIRED_SPECIALS = ("pad", "unk")
OPTIONAL_SPECIALS = ("cls", "sep")
DEFAULT_SPECIALS = {
    "pad": config.PAD_TOKEN,
    "unk": config.UNK_TOKEN,
    "cls": config.CLS_TOKEN,
    "sep": config.SEP_TOKEN,
}


class Vocab:
    """Dense token <-> id mapping with special-token ids."""

    def __init__(self, tokens, specials=None):
        """Initialize the vocabulary.

        Args:
            tokens: Token strings, index = id
            specials: Optional overrides of the special token strings
                      {'pad': ..., 'unk': ..., 'cls': ..., 'sep': ...}
        """
        self.tokens = list(tokens)
        if len(self.tokens) < 2:
            raise VocabError(f"Vocabulary needs at least 2 tokens, got {len(self.tokens)}")

        self.token_to_id = {}
        for index, token in enumerate(self.tokens):
            if token in self.token_to_id:
                raise VocabError(
                    f"Duplicate token {token!r} on lines {self.token_to_id[token] + 1} and {index + 1}"
                )
            self.token_to_id[token] = index

        self.special_tokens = dict(DEFAULT_SPECIALS)
        self.special_tokens.update(specials or {})
        missing = [
            f"{role}={self.special_tokens[role]}"
            for role in REQUIRED_SPECIALS
            if self.special_tokens[role] not in self.token_to_id
        ]
        if missing:
            raise VocabError(f"Vocabulary is missing special tokens: {', '.join(missing)}")

        self.pad_id = self.token_to_id[self.special_tokens["pad"]]
        self.unk_id = self.token_to_id[self.special_tokens["unk"]]
        self.cls_id = self.token_to_id.get(self.special_tokens["cls"])
        self.sep_id = self.token_to_id.get(self.special_tokens["sep"])

    @classmethod
    def from_tokens(cls, tokens, specials=None):
        return cls(tokens, specials)

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.token_to_id

    @property
    def size(self):
        return len(self.tokens)

    @property
    def frames(self):
        """True when both [CLS] and [SEP] are present."""
        return self.cls_id is not None and self.sep_id is not None

    def id_of(self, token):
        return self.token_to_id.get(token, self.unk_id)

    def save(self, path):
        """Write the vocabulary, one token per line."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(self.tokens) + "\n")
        return path

    def __str__(self):
        return f"Vocab({self.size} tokens, pad={self.pad_id}, unk={self.unk_id})"


def load_vocab(path, specials=None):
    """Load a vocabulary file.

    Args:
        path: UTF-8 file, one token per line
        specials: Optional overrides of the special token strings

    Returns:
        Vocab
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            # str.splitlines would also split inside tokens on \x0b, \x1c or \u2028
            lines = [line.rstrip("\r") for line in f.read().split("\n")]
    except OSError as e:
        raise VocabError(f"Cannot read vocabulary {path}: {e}")

    # A trailing newline does not add a token
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise VocabError(f"Vocabulary file {path} is empty")

    vocab = Vocab(lines, specials)
    logger.info(f"Loaded vocabulary {path}: {vocab.size} tokens")
    return vocab
