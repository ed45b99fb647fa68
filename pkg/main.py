#!/usr/bin/env python3
"""
PETE - Main Entry Point
-----------------------
This module implements the `pete` command line: train, eval-sts, embed, bench,
analyze-collisions and param-count.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.
"""

import sys
import argparse
import logging
from dataclasses import replace
from pathlib import Path

import config
from bench.embedding_bench import bench_embedding, format_results, write_bench_csv
from core.tensor import no_grad
from data.batching import PairDataset, pad_sequences
from data.datasets import load_pairs_jsonl, load_sts_tsv
from data.synthetic import synth_pairs, synth_vocab
from data.tokenizer import tokenize
from data.vocab import load_vocab
from embedding.collisions import collision_stats
from embedding.fourier import EmbeddingConfig
from evaluation.sts import evaluate_sts
from exceptions import PeteError, UsageError, ConfigError
from model.config import param_count
from model.encoder import build_model
from training.trainer import ema, in_batch_accuracy, train_loop
from utils.config_parser import KEY_SPECS, MODEL_KEYS, add_config_arguments, parse_config
from utils.file_manager import find_vocab_for, load_checkpoint
from utils.logger import setup_file_logger, setup_logger, remove_file_handlers

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage().strip()}")


def _config_overrides(args, names):
    return {name: getattr(args, name) for name in names if hasattr(args, name)}


def parse_arguments(argv=None):
    """Parse command line arguments."""
    parser = ArgumentParser(prog="pete", description="Fourier token embeddings: train, evaluate and benchmark")
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    train = subparsers.add_parser("train", help="train an encoder contrastively")
    train.add_argument("--config", type=Path, help="key=value run config file")
    add_config_arguments(train)

    eval_sts = subparsers.add_parser("eval-sts", help="zero-shot STS evaluation of a checkpoint")
    eval_sts.add_argument("--checkpoint", type=Path, required=True, help="checkpoint file")
    eval_sts.add_argument("--sts", type=Path, required=True, help="STS TSV (score, sentence1, sentence2)")
    eval_sts.add_argument("--vocab", type=Path, help="vocabulary (default: vocab.txt next to the checkpoint)")
    eval_sts.add_argument("--batch-size", type=int, default=32, help="pairs encoded per batch (default: 32)")
    eval_sts.add_argument("--threads", type=int, help="worker threads (default: PETE_THREADS)")
    eval_sts.add_argument("--json", action="store_true", help="print the report as JSON")

    embed = subparsers.add_parser("embed", help="print the sentence vector of a text")
    embed.add_argument("--checkpoint", type=Path, required=True, help="checkpoint file")
    embed.add_argument("--text", required=True, help="input text")
    embed.add_argument("--vocab", type=Path, help="vocabulary (default: vocab.txt next to the checkpoint)")

    bench = subparsers.add_parser("bench", help="benchmark fused, naive and table embedding")
    bench.add_argument("--vocab-size", type=int, default=config.VOCAB_SIZE, help=f"V (default: {config.VOCAB_SIZE})")
    bench.add_argument("--d-model", type=int, default=config.D_MODEL, help=f"d (default: {config.D_MODEL})")
    bench.add_argument("--batch", type=int, default=config.BENCH_BATCH, help=f"B (default: {config.BENCH_BATCH})")
    bench.add_argument("--seq", type=int, default=config.BENCH_SEQ, help=f"S (default: {config.BENCH_SEQ})")
    bench.add_argument("--iters", type=int, default=config.BENCH_MEASURED_ITERS,
                       help=f"measured iterations (default: {config.BENCH_MEASURED_ITERS})")
    bench.add_argument("--warmup", type=int, default=config.BENCH_WARMUP_ITERS,
                       help=f"warmup iterations (default: {config.BENCH_WARMUP_ITERS})")
    bench.add_argument("--seed", type=int, default=0, help="id batch seed (default: 0)")
    bench.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")
    bench.add_argument("--csv", type=Path, help="write variant,tokens_per_second,cv,bytes_table")

    collisions = subparsers.add_parser("analyze-collisions", help="nearest-neighbour distances of base embeddings")
    collisions.add_argument("--vocab-size", type=int, default=config.VOCAB_SIZE, help=f"V (default: {config.VOCAB_SIZE})")
    collisions.add_argument("--d-model", type=int, default=config.D_MODEL, help=f"d (default: {config.D_MODEL})")
    collisions.add_argument("--sample", type=int, help="scan a random subset of this many ids")
    collisions.add_argument("--random-pairs", type=int, default=config.COLLISION_RANDOM_PAIRS,
                            help=f"random pairs for the cross-check (default: {config.COLLISION_RANDOM_PAIRS})")
    collisions.add_argument("--bins", type=int, default=config.COLLISION_HIST_BINS,
                            help=f"histogram bins (default: {config.COLLISION_HIST_BINS})")
    collisions.add_argument("--seed", type=int, default=0, help="sampling seed (default: 0)")
    collisions.add_argument("--csv", type=Path, help="write pair_rank,distance")

    count = subparsers.add_parser("param-count", help="closed-form parameter count of a model config")
    count.add_argument("--config", type=Path, help="key=value run config file")
    add_config_arguments(count, MODEL_KEYS)

    return parser.parse_args(argv)


def _load_vocab_for(checkpoint, vocab_path):
    path = vocab_path or find_vocab_for(checkpoint)
    if path is None:
        raise ConfigError(f"No vocab.txt found next to {checkpoint}; pass --vocab")
    return load_vocab(path)


def cmd_train(args):
    run = parse_config(args.config, _config_overrides(args, [spec.name for spec in KEY_SPECS]), command="train")
    remove_file_handlers()
    setup_file_logger("", run.out_dir)

    if run.synthetic_pairs > 0:
        vocab = synth_vocab(run.synthetic_vocab_tokens)
        pairs = synth_pairs(run.synthetic_pairs, vocab, run.train.seed, run.synthetic_topics)
    else:
        vocab = load_vocab(run.vocab_path)
        pairs = load_pairs_jsonl(run.train_path, vocab, run.model.max_seq_len)
    run = run.with_vocab_size(vocab.size)

    model = build_model(run.model)
    dataset = PairDataset(pairs, vocab, run.model.max_seq_len)
    _, metrics = train_loop(model, dataset, run.train, run.out_dir, vocab)

    accuracy = in_batch_accuracy(model, dataset, run.train.batch_size, seed=run.train.seed)
    print(f"steps: {metrics[-1]['step']}")
    print(f"final loss (smoothed): {ema([m['loss'] for m in metrics]):.6f}")
    print(f"in-batch retrieval accuracy: {accuracy:.4f}")
    print(f"checkpoint: {run.out_dir / 'model.ckpt'}")

    if run.sts_path is not None:
        sts_pairs = load_sts_tsv(run.sts_path, vocab, run.model.max_seq_len)
        report = evaluate_sts(model, sts_pairs, vocab.pad_id, threads=run.threads, max_len=run.model.max_seq_len,
                              sep_id=vocab.sep_id)
        print(report.to_text())
    remove_file_handlers()
    return 0


def cmd_eval_sts(args):
    model = load_checkpoint(args.checkpoint)
    vocab = _load_vocab_for(args.checkpoint, args.vocab)
    pairs = load_sts_tsv(args.sts, vocab, model.cfg.max_seq_len)
    report = evaluate_sts(model, pairs, vocab.pad_id, batch_size=args.batch_size, threads=args.threads,
                          max_len=model.cfg.max_seq_len, sep_id=vocab.sep_id)
    print(report.to_json() if args.json else report.to_text())
    return 0


def cmd_embed(args):
    model = load_checkpoint(args.checkpoint)
    vocab = _load_vocab_for(args.checkpoint, args.vocab)
    ids = tokenize(args.text, vocab, model.cfg.max_seq_len)
    if not ids:
        raise ConfigError(f"Text {args.text!r} produced no tokens")
    ids, mask = pad_sequences([ids], vocab.pad_id)
    model.eval()
    with no_grad():
        vector = model.encode(ids, mask).data[0]
    print(" ".join(f"{value:.6f}" for value in vector))
    return 0


def cmd_bench(args):
    cfg = EmbeddingConfig(args.vocab_size, args.d_model)
    results = bench_embedding(cfg, (args.batch, args.seq), iters=args.iters, warmup=args.warmup,
                              seed=args.seed, threads=args.threads)
    print(format_results(results))
    if args.csv:
        write_bench_csv(args.csv, results)
    return 0


def cmd_analyze_collisions(args):
    cfg = EmbeddingConfig(args.vocab_size, args.d_model)
    report = collision_stats(cfg, sample=args.sample, random_pairs=args.random_pairs, seed=args.seed, bins=args.bins)
    print(report.to_text())
    if args.csv:
        report.write_csv(args.csv)
    return 0


def _millions(count):
    return f"{count / 1e6:.2f}m"


def cmd_param_count(args):
    run = parse_config(args.config, _config_overrides(args, MODEL_KEYS))
    cfg = run.model
    counts = param_count(cfg)
    for name, value in counts.items():
        if name != "total":
            print(f"{name}: {value:,}")
    print(f"total: {counts['total']:,} ({_millions(counts['total'])})")

    table = cfg.vocab_size * cfg.d_model
    if cfg.embedding_kind == "fourier":
        learned = param_count(replace(cfg, embedding_kind="learned", dropout_p=None))
        print(f"learned-table model at equal config: {learned['total']:,} ({_millions(learned['total'])})")
        print(f"saving: {learned['total'] - counts['total']:,} (table {table:,} minus head {counts['embedding']:,})")
    else:
        print(f"embedding table share: {table / counts['total']:.1%}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval-sts": cmd_eval_sts,
    "embed": cmd_embed,
    "bench": cmd_bench,
    "analyze-collisions": cmd_analyze_collisions,
    "param-count": cmd_param_count,
}


def main(argv=None):
    """Run one subcommand.

    Args:
        argv: Argument list (defaults to sys.argv[1:])

    Returns:
        Exit code
    """
    try:
        args = parse_arguments(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)

    setup_logger(logging.DEBUG if args.debug else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except PeteError as e:
        logger.error(str(e))
        print(f"pete {args.command}: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}")
        print(f"pete {args.command}: {e}", file=sys.stderr)
        return 2


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
