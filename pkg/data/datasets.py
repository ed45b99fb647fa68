"""
PETE - Datasets
---------------
This module loads sentence-pair files:

- pairs JSONL: one object per line with sentence1, sentence2 and an optional
  label; only "entailment" rows are kept when a label is present
- STS TSV: score<TAB>sentence1<TAB>sentence2 with 0 <= score <= 5, an optional
  header line naming those columns

Malformed lines are counted and skipped, with one warning summary per file.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import config
from data.tokenizer import tokenize
from exceptions import DataError

logger = logging.getLogger(__name__)

STS_HEADER = ["score", "sentence1", "sentence2"]
ENTAILMENT = "entailment"


@dataclass
class SentencePair:
    """Two sentences, their token ids and an optional gold score."""

    text_a: str
    text_b: str
    ids_a: list = field(default_factory=list)
    ids_b: list = field(default_factory=list)
    score: float = None
    label: str = None

    @classmethod
    def from_text(cls, text_a, text_b, vocab, max_len=config.MAX_SEQ_LEN, score=None, label=None):
        return cls(
            text_a, text_b,
            ids_a=tokenize(text_a, vocab, max_len),
            ids_b=tokenize(text_b, vocab, max_len),
            score=score, label=label,
        )


@dataclass
class LoadStats:
    """Line accounting for one file: kept + skipped + filtered == total."""

    total: int = 0
    kept: int = 0
    skipped: int = 0
    filtered: int = 0
    reasons: dict = field(default_factory=dict)

    def skip(self, reason):
        self.skipped += 1
        self.reasons[reason] = self.reasons.get(reason, 0) + 1


def _read_lines(path):
    """Lines of a UTF-8 file split on line feeds only; a trailing newline ends the last line."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
        lines = [line.rstrip("\r") for line in text.split("\n")]
        if text.endswith("\n"):
            lines.pop()
        return lines
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}")


def _finish(path, pairs, stats, with_stats):
    if stats.skipped or stats.filtered:
        summary = ", ".join(f"{reason}: {count}" for reason, count in sorted(stats.reasons.items()))
        logger.warning(
            f"{path}: kept {stats.kept} of {stats.total} lines, "
            f"skipped {stats.skipped} ({summary or 'none'}), filtered {stats.filtered}"
        )
    else:
        logger.info(f"{path}: loaded {stats.kept} pairs")
    if not pairs:
        raise DataError(f"No usable rows in {path} ({stats.total} lines)")
    return (pairs, stats) if with_stats else pairs


def load_pairs_jsonl(path, vocab, max_len=config.MAX_SEQ_LEN, with_stats=False):
    """Load training pairs from JSONL.

    Args:
        path: File path
        vocab: Vocab used for tokenization
        max_len: Maximum sequence length
        with_stats: Also return LoadStats

    Returns:
        List of SentencePair (and LoadStats when requested)
    """
    pairs, stats = [], LoadStats()
    for line in _read_lines(path):
        stats.total += 1
        if not line.strip():
            stats.skip("blank line")
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError:
            stats.skip("invalid json")
            continue
        if not isinstance(row, dict):
            stats.skip("not an object")
            continue
        text_a, text_b = row.get("sentence1"), row.get("sentence2")
        if not isinstance(text_a, str) or not isinstance(text_b, str):
            stats.skip("missing sentence1/sentence2")
            continue
        label = row.get("label")
        if "label" in row and label != ENTAILMENT:
            stats.filtered += 1
            continue

        pair = SentencePair.from_text(text_a, text_b, vocab, max_len, label=label)
        if not pair.ids_a or not pair.ids_b:
            stats.skip("empty tokenization")
            continue
        pairs.append(pair)
        stats.kept += 1

    return _finish(path, pairs, stats, with_stats)


def load_sts_tsv(path, vocab, max_len=config.MAX_SEQ_LEN, with_stats=False):
    """Load scored STS pairs from TSV.

    Args:
        path: File path
        vocab: Vocab used for tokenization
        max_len: Maximum sequence length
        with_stats: Also return LoadStats

    Returns:
        List of SentencePair with score set (and LoadStats when requested)
    """
    pairs, stats = [], LoadStats()
    lines = _read_lines(path)
    if lines and [c.strip().lower() for c in lines[0].split("\t")] == STS_HEADER:
        lines = lines[1:]

    for line in lines:
        stats.total += 1
        if not line.strip():
            stats.skip("blank line")
            continue
        columns = line.split("\t")
        if len(columns) != 3:
            stats.skip("wrong column count")
            continue
        try:
            score = float(columns[0])
        except ValueError:
            stats.skip("non-numeric score")
            continue
        if not 0.0 <= score <= 5.0:
            stats.skip("score outside [0, 5]")
            continue

        pair = SentencePair.from_text(columns[1], columns[2], vocab, max_len, score=score)
        if not pair.ids_a or not pair.ids_b:
            stats.skip("empty tokenization")
            continue
        pairs.append(pair)
        stats.kept += 1

    return _finish(path, pairs, stats, with_stats)
