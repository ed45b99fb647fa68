"""
PETE - Configuration
--------------------
This module contains the default settings for the Fourier embedding library.

Full-scale training settings are the defaults; desk-scale runs override them
through a run config file or command-line flags (see utils/config_parser.py).
"""

import os
import math
import logging
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

# Application paths
BASE_DIR = Path(__file__).resolve().parent
DEFAULT_OUT_DIR = Path("runs") / "latest"

# Numerics
# Compile-time float switch. 64-bit exists only to tighten gradient checks.
TENSOR_DTYPE = np.float64 if os.environ.get("PETE_FLOAT64") == "1" else np.float32
MASK_FILL_VALUE = -1e9

# Tokenizer settings
PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
MAX_WORD_CHARS = 100
MAX_SEQ_LEN = 128

# Model settings
VOCAB_SIZE = 30522  # BERT-uncased
D_MODEL = 256
N_LAYERS = 1
N_HEADS = 1
FFN_FACTOR = 4.0
HEAD_FFN_FACTOR = 0.25
HEAD_KIND = "geglu"
USE_PROJECTION = True
EMBEDDING_KIND = "fourier"
BASELINE_DROPOUT = 0.1
ROTARY_BASE = 10000.0
RMSNORM_EPS = 1e-6
INIT_STD = 0.02
LOGIT_SCALE_INIT = math.log(1.0 / 0.07)
LOGIT_SCALE_MIN = math.log(1.0 / 100.0)
LOGIT_SCALE_MAX = math.log(100.0)
SEED = 0

# Training settings
BATCH_SIZE = 128
TOTAL_STEPS = 122700
PEAK_LR = 2e-5
WARMUP_STEPS = 1000
WEIGHT_DECAY = 0.01
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
GRAD_CLIP_NORM = 1.0
LOG_EVERY = 10
CHECKPOINT_EVERY = 1000
KEEP_CHECKPOINTS = 3
PREFETCH_BATCHES = 2

# Synthetic corpus settings
SYNTH_VOCAB_TOKENS = 1024
SYNTH_TOPICS = 4
SYNTH_SENTENCE_LEN = 8
SYNTH_SWAPS = 2

# Collision analysis settings
COLLISION_RANDOM_PAIRS = 1_000_000
COLLISION_HIST_BINS = 20
COLLISION_CHUNK = 20_000

# Benchmark settings
BENCH_WARMUP_ITERS = 3
BENCH_MEASURED_ITERS = 20
BENCH_BATCH = 128
BENCH_SEQ = 64
BENCH_TOLERANCE = 1e-6


def default_threads():
    """Worker count for batch preparation and evaluation.

    Returns:
        Value of the PETE_THREADS environment variable, or 1
    """
    raw = os.environ.get("PETE_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer PETE_THREADS={raw!r}")
        return 1
    return max(1, threads)
