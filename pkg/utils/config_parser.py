"""
PETE - Config Parser
--------------------
This module merges run settings from built-in defaults, an optional
key=value file and command-line flags (in increasing precedence).

One key table drives both the file parser and the argparse flags, so every key
has a single type, default and help text. Unknown keys are errors.
"""

import argparse
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple, Callable, Any, Optional

import config
from exceptions import ConfigError
from model.config import ModelConfig
from training.config import TrainConfig

logger = logging.getLogger(__name__)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_bool(raw):
    if isinstance(raw, bool):
        return raw
    value = str(raw).strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def parse_fraction(raw):
    """Accept 4, 0.25 or 1/4."""
    return float(Fraction(str(raw).strip()))


def parse_optional_float(raw):
    if raw is None or str(raw).strip().lower() == "none":
        return None
    return float(raw)


def parse_int(raw):
    if isinstance(raw, int):
        return raw
    return int(str(raw).strip())


class KeySpec(NamedTuple):
    name: str
    type: Callable
    default: Any
    help: str
    flag: Optional[str]
    section: str


KEY_SPECS = [
    # model
    KeySpec("n_layers", parse_int, config.N_LAYERS, "encoder layers", "--layers", "model"),
    KeySpec("n_heads", parse_int, config.N_HEADS, "attention heads", "--heads", "model"),
    KeySpec("d_model", parse_int, config.D_MODEL, "model dimension (even)", "--d-model", "model"),
    KeySpec("ffn_factor", parse_fraction, config.FFN_FACTOR, "encoder FFN expansion, e.g. 4 or 1/4", "--ffn-factor", "model"),
    KeySpec("head_ffn_factor", parse_fraction, config.HEAD_FFN_FACTOR, "Fourier head FFN expansion", "--head-ffn-factor", "model"),
    KeySpec("head_kind", str, config.HEAD_KIND, "Fourier head: geglu or linear", "--head-kind", "model"),
    KeySpec("embedding_kind", str, config.EMBEDDING_KIND, "embedding: fourier or learned", "--embedding", "model"),
    KeySpec("vocab_size", parse_int, config.VOCAB_SIZE, "vocabulary size when no vocab file is given", "--vocab-size", "model"),
    KeySpec("dropout_p", parse_optional_float, None,
            f"dropout (learned baseline defaults to {config.BASELINE_DROPOUT}; fourier uses none)", "--dropout", "model"),
    KeySpec("max_seq_len", parse_int, config.MAX_SEQ_LEN, "maximum tokens per sentence", "--max-len", "model"),
    KeySpec("use_projection", parse_bool, config.USE_PROJECTION, "d x d projection after pooling", "--projection", "model"),
    KeySpec("rotary_base", float, config.ROTARY_BASE, "rotary base", None, "model"),
    KeySpec("norm_eps", float, config.RMSNORM_EPS, "RMSNorm epsilon", None, "model"),
    KeySpec("seed", parse_int, config.SEED, "seed for init, data order and dropout", "--seed", "shared"),
    # training
    KeySpec("batch_size", parse_int, config.BATCH_SIZE, "pairs per batch", "--batch-size", "train"),
    KeySpec("total_steps", parse_int, config.TOTAL_STEPS, "training steps", "--steps", "train"),
    KeySpec("peak_lr", float, config.PEAK_LR, "peak learning rate", "--lr", "train"),
    KeySpec("warmup_steps", parse_int, config.WARMUP_STEPS, "linear warmup steps", "--warmup", "train"),
    KeySpec("weight_decay", float, config.WEIGHT_DECAY, "AdamW decoupled weight decay", "--weight-decay", "train"),
    KeySpec("beta1", float, config.ADAM_BETA1, "AdamW beta1", None, "train"),
    KeySpec("beta2", float, config.ADAM_BETA2, "AdamW beta2", None, "train"),
    KeySpec("eps", float, config.ADAM_EPS, "AdamW epsilon", None, "train"),
    KeySpec("log_every", parse_int, config.LOG_EVERY, "metrics interval in steps", "--log-every", "train"),
    KeySpec("checkpoint_every", parse_int, config.CHECKPOINT_EVERY, "checkpoint interval in steps", "--checkpoint-every", "train"),
    KeySpec("grad_clip", float, config.GRAD_CLIP_NORM, "global gradient norm clip (0 disables)", "--grad-clip", "train"),
    # run
    KeySpec("vocab_path", Path, None, "vocabulary file, one token per line", "--vocab", "run"),
    KeySpec("train_path", Path, None, "training pairs JSONL", "--train-data", "run"),
    KeySpec("sts_path", Path, None, "STS TSV evaluated after training", "--sts", "run"),
    KeySpec("out_dir", Path, config.DEFAULT_OUT_DIR, "output directory", "--out-dir", "run"),
    KeySpec("synthetic_pairs", parse_int, 0, "train on this many synthetic pairs instead of files", "--synthetic-pairs", "run"),
    KeySpec("synthetic_topics", parse_int, config.SYNTH_TOPICS, "topics of the synthetic corpus", "--synthetic-topics", "run"),
    KeySpec("synthetic_vocab_tokens", parse_int, config.SYNTH_VOCAB_TOKENS, "content tokens of the synthetic vocabulary",
            "--synthetic-vocab", "run"),
    KeySpec("threads", parse_int, None, "worker threads (defaults to PETE_THREADS)", "--threads", "run"),
]

SPECS_BY_NAME = {spec.name: spec for spec in KEY_SPECS}
MODEL_KEYS = [s.name for s in KEY_SPECS if s.section in ("model", "shared")]
TRAIN_KEYS = [s.name for s in KEY_SPECS if s.section in ("train", "shared")]


@dataclass
class RunConfig:
    """Merged model, training and data settings for one run."""

    model: ModelConfig
    train: TrainConfig
    vocab_path: Path = None
    train_path: Path = None
    sts_path: Path = None
    out_dir: Path = config.DEFAULT_OUT_DIR
    synthetic_pairs: int = 0
    synthetic_topics: int = config.SYNTH_TOPICS
    synthetic_vocab_tokens: int = config.SYNTH_VOCAB_TOKENS
    threads: int = None
    values: dict = field(default_factory=dict, repr=False)
    explicit: set = field(default_factory=set, repr=False)

    def with_vocab_size(self, vocab_size):
        """Copy with the model's vocab size set from a loaded vocabulary."""
        return replace(self, model=replace(self.model, vocab_size=vocab_size))


def convert(name, raw, source="value"):
    """Convert a raw value with the key's type.

    Args:
        name: Key name
        raw: Raw value (string from a file or already-typed flag value)
        source: Where the value came from, for the error message

    Returns:
        Typed value
    """
    if name not in SPECS_BY_NAME:
        raise ConfigError(f"Unknown config key {name!r} ({source})")
    spec = SPECS_BY_NAME[name]
    try:
        return spec.type(raw)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"Bad value {raw!r} for {name} ({source}): {e}")


def read_config_file(path):
    """Parse key=value lines; '#' starts a comment.

    Args:
        path: Config file path

    Returns:
        Dictionary of typed values
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}")

    values = {}
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        values[key] = convert(key, raw, f"{path}:{number}")
    return values


def add_config_arguments(parser, names=None):
    """Add one flag per key; defaults are documented but not injected.

    Args:
        parser: argparse parser or subparser
        names: Keys to expose (all flagged keys by default)
    """
    for spec in KEY_SPECS:
        if spec.flag is None or (names is not None and spec.name not in names):
            continue
        parser.add_argument(
            spec.flag, dest=spec.name, type=str, default=argparse.SUPPRESS,
            help=f"{spec.help} (key {spec.name}, default: {spec.default})",
        )


def parse_config(path=None, overrides=None, command=None):
    """Build a RunConfig from defaults, a config file and flag overrides.

    Args:
        path: Optional key=value file
        overrides: Optional {key: value} from flags; these win over the file
        command: Subcommand being configured ('train' adds data requirements)

    Returns:
        RunConfig
    """
    values = {spec.name: spec.default for spec in KEY_SPECS}
    explicit = set()
    if path is not None:
        file_values = read_config_file(path)
        values.update(file_values)
        explicit.update(file_values)
    for name, raw in (overrides or {}).items():
        values[name] = convert(name, raw, "command line")
        explicit.add(name)

    if values["embedding_kind"] == "fourier" and values["dropout_p"] not in (None, 0.0):
        raise ConfigError(
            f"dropout_p={values['dropout_p']} conflicts with embedding_kind=fourier: Fourier embedding omits dropout"
        )

    model_cfg = ModelConfig(**{name: values[name] for name in MODEL_KEYS})
    train_cfg = TrainConfig(**{name: values[name] for name in TRAIN_KEYS})
    run = RunConfig(
        model=model_cfg,
        train=train_cfg,
        vocab_path=values["vocab_path"],
        train_path=values["train_path"],
        sts_path=values["sts_path"],
        out_dir=Path(values["out_dir"]),
        synthetic_pairs=values["synthetic_pairs"],
        synthetic_topics=values["synthetic_topics"],
        synthetic_vocab_tokens=values["synthetic_vocab_tokens"],
        threads=values["threads"] or config.default_threads(),
        values=values,
        explicit=explicit,
    )
    validate_run_config(run, command)
    return run


def validate_run_config(run, command=None):
    """Check data requirements, path existence and the output directory."""
    if command == "train":
        if run.synthetic_pairs < 0:
            raise ConfigError(f"synthetic_pairs must be >= 0, got {run.synthetic_pairs}")
        if run.synthetic_pairs == 0:
            if run.vocab_path is None:
                raise ConfigError("train needs a vocab path (vocab_path / --vocab) or synthetic_pairs > 0")
            if run.train_path is None:
                raise ConfigError("train needs training pairs (train_path / --train-data) or synthetic_pairs > 0")

    for name in ("vocab_path", "train_path", "sts_path"):
        path = getattr(run, name)
        if path is not None and not Path(path).exists():
            raise ConfigError(f"{name} {path} does not exist")

    if command == "train":
        try:
            run.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"Cannot create output directory {run.out_dir}: {e}")
