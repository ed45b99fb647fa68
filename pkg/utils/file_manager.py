"""
PETE - File Manager
-------------------
This module handles saving and loading model checkpoints and run outputs.

Checkpoint layout (all integers little-endian):

    8 bytes   magic b"PETECKPT"
    8 bytes   header length H (uint64)
    H bytes   UTF-8 JSON header {format_version, model_config, manifest, metadata}
    payload   float32 arrays in manifest order, little-endian
    8 bytes   payload length (uint64)

Each manifest entry holds a tensor name, its shape and its byte offset into the
payload. Offsets are contiguous.
"""

import os
import csv
import json
import struct
import logging
from pathlib import Path

import numpy as np

import config
from exceptions import CheckpointError
from model.config import ModelConfig
from model.encoder import build_model

logger = logging.getLogger(__name__)

MAGIC = b"PETECKPT"
FORMAT_VERSION = 1
PAYLOAD_DTYPE = np.dtype("<f4")
_U64 = struct.Struct("<Q")


def _atomic_write(path, chunks):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "wb") as f:
        for chunk in chunks:
            f.write(chunk)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp_path, path)


def encode_checkpoint(model, metadata=None):
    """Serialise a model's parameters and config into checkpoint bytes."""
    manifest, arrays, offset = [], [], 0
    for name, param in model.named_parameters():
        array = np.asarray(param.data, dtype=PAYLOAD_DTYPE, order="C")
        manifest.append({"name": name, "shape": list(array.shape), "offset": offset})
        arrays.append(array.tobytes())
        offset += array.nbytes

    header = {
        "format_version": FORMAT_VERSION,
        "model_config": model.cfg.to_dict(),
        "manifest": manifest,
        "metadata": metadata or {},
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return [MAGIC, _U64.pack(len(header_bytes)), header_bytes, *arrays, _U64.pack(offset)]


def save_checkpoint(model, path, metadata=None):
    """Write a checkpoint atomically (temp file, then rename).

    Args:
        model: Model
        path: Destination path
        metadata: Optional JSON-compatible dictionary (e.g. the training step)

    Returns:
        Path written
    """
    _atomic_write(path, encode_checkpoint(model, metadata))
    logger.info(f"Checkpoint saved to {path}")
    return Path(path)


def read_checkpoint(path):
    """Parse and validate a checkpoint file.

    Args:
        path: Checkpoint path

    Returns:
        (header dict, {name: float32 array} in manifest order)
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}")

    if len(blob) < len(MAGIC) + 2 * _U64.size or blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
    (header_len,) = _U64.unpack_from(blob, len(MAGIC))
    header_start = len(MAGIC) + _U64.size
    payload_start = header_start + header_len
    if payload_start + _U64.size > len(blob):
        raise CheckpointError(f"{path}: header length {header_len} exceeds file size {len(blob)}")

    try:
        header = json.loads(blob[header_start:payload_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable header ({e})")
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: format_version {version} is not supported (expected {FORMAT_VERSION})")

    (payload_len,) = _U64.unpack_from(blob, len(blob) - _U64.size)
    actual_len = len(blob) - _U64.size - payload_start
    if payload_len != actual_len:
        raise CheckpointError(
            f"{path}: truncated or corrupt payload (trailer says {payload_len} bytes, found {actual_len})"
        )

    payload = memoryview(blob)[payload_start: payload_start + payload_len]
    state, expected_offset = {}, 0
    for entry in header.get("manifest", []):
        name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
        nbytes = int(np.prod(shape, dtype=np.int64)) * PAYLOAD_DTYPE.itemsize
        if offset != expected_offset or offset + nbytes > payload_len:
            raise CheckpointError(f"{path}: manifest entry {name} has offset {offset}, expected {expected_offset}")
        array = np.frombuffer(payload[offset: offset + nbytes], dtype=PAYLOAD_DTYPE).reshape(shape)
        state[name] = array.astype(np.float32)
        expected_offset = offset + nbytes
    if expected_offset != payload_len:
        raise CheckpointError(f"{path}: manifest covers {expected_offset} of {payload_len} payload bytes")
    return header, state


def load_checkpoint(path, model_config=None):
    """Load a checkpoint into a freshly built model.

    Args:
        path: Checkpoint path
        model_config: Optional ModelConfig to load into instead of the stored one

    Returns:
        Model with every parameter restored
    """
    header, state = read_checkpoint(path)
    cfg = model_config or ModelConfig.from_dict(header["model_config"])
    model = build_model(cfg)

    named = model.named_parameters()
    stored = list(state.items())
    for (name, param), (stored_name, array) in zip(named, stored):
        if name != stored_name or param.shape != array.shape:
            raise CheckpointError(
                f"{path}: first mismatched tensor {name} {list(param.shape)} "
                f"vs stored {stored_name} {list(array.shape)}"
            )
    if len(named) != len(stored):
        longer = named if len(named) > len(stored) else stored
        name = longer[min(len(named), len(stored))][0]
        raise CheckpointError(f"{path}: first mismatched tensor {name} (tensor counts {len(named)} vs {len(stored)})")

    model.load_state_dict(state)
    logger.info(f"Loaded checkpoint {path} ({model.num_parameters():,} parameters)")
    return model


class CheckpointManager:
    """Periodic checkpoints for one run directory.

    Keeps the most recent checkpoints (older ones are deleted) and always the
    last good one, which is where a halted run can resume from.
    """

    def __init__(self, out_dir, keep=config.KEEP_CHECKPOINTS):
        """Initialize the checkpoint manager.

        Args:
            out_dir: Run output directory
            keep: Number of periodic checkpoints to retain
        """
        self.out_dir = Path(out_dir)
        self.checkpoint_dir = self.out_dir / "checkpoints"
        self.keep = max(1, keep)
        self.recent_checkpoints = []
        self.last_good = None

    def save(self, model, step):
        """Write the checkpoint for a training step."""
        path = save_checkpoint(model, self.checkpoint_dir / f"step_{step:08d}.ckpt", {"step": step})
        self.last_good = path
        self.add_recent_checkpoint(path)
        return path

    def save_final(self, model, step):
        path = save_checkpoint(model, self.out_dir / "model.ckpt", {"step": step})
        self.last_good = path
        return path

    def add_recent_checkpoint(self, path):
        """Add a checkpoint to the recent list and prune the oldest ones."""
        if path in self.recent_checkpoints:
            self.recent_checkpoints.remove(path)
        self.recent_checkpoints.insert(0, path)
        while len(self.recent_checkpoints) > self.keep:
            stale = self.recent_checkpoints.pop()
            if stale != self.last_good and stale.exists():
                stale.unlink()
                logger.debug(f"Removed old checkpoint {stale}")

    def save_vocab(self, vocab):
        return vocab.save(self.out_dir / "vocab.txt")


def find_vocab_for(checkpoint_path):
    """vocab.txt next to a checkpoint, or in the run directory above it."""
    checkpoint_path = Path(checkpoint_path)
    for directory in (checkpoint_path.parent, checkpoint_path.parent.parent):
        candidate = directory / "vocab.txt"
        if candidate.exists():
            return candidate
    return None


def write_metrics_csv(path, rows):
    """Write training metrics with columns step,loss,lr,elapsed_seconds.

    Args:
        path: CSV path
        rows: List of {step, loss, lr, elapsed} dictionaries
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss", "lr", "elapsed_seconds"])
        for row in rows:
            writer.writerow([row["step"], repr(row["loss"]), repr(row["lr"]), f"{row['elapsed']:.6f}"])
    logger.info(f"Metrics written to {path}")
    return path
