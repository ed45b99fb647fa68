"""
PETE - STS Evaluation
---------------------
This module scores sentence pairs with the cosine of their pooled encodings
and correlates the scores against gold similarity ratings.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

import config
from core.tensor import no_grad
from data.batching import collate
from evaluation.metrics import cosine, pearson, spearman
from exceptions import EvaluationError

logger = logging.getLogger(__name__)


@dataclass
class EvalReport:
    """Correlation of cosine scores with gold ratings."""

    pearson_r: float
    spearman_r: float
    n: int
    records: list = field(default_factory=list, repr=False)

    def to_text(self):
        return (
            f"STS evaluation over {self.n} pairs\n"
            f"  Pearson r:  {self.pearson_r:.4f}\n"
            f"  Spearman r: {self.spearman_r:.4f}"
        )

    def to_json(self):
        return json.dumps({"pearson": self.pearson_r, "spearman": self.spearman_r, "n": self.n}, sort_keys=True)


def _model_encoder(model):
    def encode_fn(ids, mask):
        return model.encode(ids, mask).data
    return encode_fn


def evaluate_sts(model, pairs, pad_id, batch_size=32, encode_fn=None, threads=None, max_len=config.MAX_SEQ_LEN,
                 sep_id=None):
    """Zero-shot STS evaluation.

    Args:
        model: Model (ignored when encode_fn is given)
        pairs: SentencePairs with gold scores
        pad_id: Padding id
        batch_size: Pairs encoded per batch
        encode_fn: Optional function (ids, mask) -> vectors [B, d]
        threads: Worker threads for encoding (defaults to PETE_THREADS)
        max_len: Truncation length
        sep_id: Closing frame id kept by truncation

    Returns:
        EvalReport with records (index, cosine, gold) in input order
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise EvaluationError(f"STS evaluation needs at least 2 pairs, got {len(pairs)}")
    unscored = [i for i, p in enumerate(pairs) if p.score is None]
    if unscored:
        raise EvaluationError(f"Pair {unscored[0]} has no gold score")
    if batch_size < 1:
        raise EvaluationError(f"batch_size must be positive, got {batch_size}")
    threads = threads or config.default_threads()

    if encode_fn is None:
        model.eval()
        encode_fn = _model_encoder(model)

    starts = list(range(0, len(pairs), batch_size))

    def score_chunk(start):
        chunk = pairs[start:start + batch_size]
        batch = collate(chunk, pad_id, max_len, offset=start, sep_id=sep_id)
        with no_grad():
            a_vecs = np.asarray(encode_fn(batch.ids_a, batch.mask_a))
            b_vecs = np.asarray(encode_fn(batch.ids_b, batch.mask_b))
        return [
            (start + i, cosine(a_vecs[i], b_vecs[i]), float(chunk[i].score))
            for i in range(len(chunk))
        ]

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            chunks = list(executor.map(score_chunk, starts))
    else:
        chunks = [score_chunk(start) for start in starts]

    records = sorted((record for chunk in chunks for record in chunk), key=lambda r: r[0])
    cosines = np.array([r[1] for r in records])
    gold = np.array([r[2] for r in records])
    report = EvalReport(pearson(cosines, gold), spearman(cosines, gold), len(records), records)
    logger.info(f"STS: pearson {report.pearson_r:.4f}, spearman {report.spearman_r:.4f} over {report.n} pairs")
    return report
