"""
PETE - Data Package
"""

from data.vocab import Vocab, load_vocab
from data.tokenizer import tokenize
from data.datasets import SentencePair, LoadStats, load_pairs_jsonl, load_sts_tsv
from data.synthetic import synth_vocab, synth_pairs
from data.batching import Batch, PairDataset, make_batches, collate, pad_sequences
