"""
PETE - Trainer
--------------
This module runs contrastive training: batches are prepared ahead on a
background thread, while forward, backward and the optimizer update run as one
single-threaded step.
"""

import time
import queue
import logging
import threading

import numpy as np

import config
from core.tensor import Tape, no_grad
from exceptions import NonFiniteError, TrainingError
from training.loss import info_nce_loss, retrieval_accuracy
from training.optimizer import AdamW, clip_grad_norm
from training.schedule import lr_schedule
from utils.file_manager import CheckpointManager, write_metrics_csv
from utils.logger import TrainingEvent

logger = logging.getLogger(__name__)

_STOP = object()


class BatchPrefetcher:
    """Bounded producer thread over a deterministic batch stream."""

    def __init__(self, batch_iter, n_batches, capacity=config.PREFETCH_BATCHES):
        self.queue = queue.Queue(maxsize=max(2, capacity))
        self._iter = batch_iter
        self._n_batches = n_batches
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, name="batch-prefetch", daemon=True)

    def _run(self):
        try:
            for _ in range(self._n_batches):
                if self._stop.is_set():
                    return
                self._put(next(self._iter))
        except Exception as e:
            self._put(e)
        finally:
            self._put(_STOP)

    def _put(self, item):
        while not self._stop.is_set():
            try:
                self.queue.put(item, timeout=0.1)
                return
            except queue.Full:
                continue

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, exc_type, exc, tb):
        self._stop.set()
        self._thread.join(timeout=5.0)
        return False

    def __iter__(self):
        while True:
            item = self.queue.get()
            if item is _STOP:
                return
            if isinstance(item, Exception):
                raise item
            yield item


def ema(values, alpha=0.1):
    """Exponential moving average of a sequence (last value returned)."""
    smoothed = None
    for value in values:
        smoothed = value if smoothed is None else (1.0 - alpha) * smoothed + alpha * value
    return smoothed


class Trainer:
    """Contrastive trainer for one model and one dataset."""

    def __init__(self, model, dataset, train_cfg, out_dir=None, vocab=None):
        """Initialize the trainer.

        Args:
            model: Model to train in place
            dataset: PairDataset of matched pairs
            train_cfg: TrainConfig
            out_dir: Optional run directory for checkpoints and metrics
            vocab: Optional Vocab saved next to the checkpoints
        """
        self.model = model
        self.dataset = dataset
        self.cfg = train_cfg
        self.out_dir = out_dir
        self.vocab = vocab
        self.optimizer = AdamW(model.named_parameters(), train_cfg)
        self.checkpoints = CheckpointManager(out_dir) if out_dir is not None else None

        self.metrics = []
        self.step = 0
        self.event_listeners = []
        self.stats = {
            'step': 0,
            'loss': None,
            'lr': 0.0,
            'grad_norm': 0.0,
            'step_time': 0.0,
            'elapsed': 0.0,
        }

    def add_event_listener(self, listener):
        """Add an event listener.

        Args:
            listener: Function that takes an event type and data
        """
        if listener not in self.event_listeners:
            self.event_listeners.append(listener)

    def remove_event_listener(self, listener):
        if listener in self.event_listeners:
            self.event_listeners.remove(listener)

    def _notify_listeners(self, event_type, data):
        for listener in self.event_listeners:
            try:
                listener(event_type, data)
            except Exception as e:
                logger.error(f"Error in event listener: {e}")

    def train_step(self, batch, lr_t):
        """One forward/backward/update step; returns the loss value."""
        self.model.train()

        # Forward both sides on one tape
        with Tape() as tape:
            a_vecs = self.model.encode(batch.ids_a, batch.mask_a)
            b_vecs = self.model.encode(batch.ids_b, batch.mask_b)
            loss = info_nce_loss(a_vecs, b_vecs, self.model.logit_scale)
        loss_value = float(loss.data)
        tape.backward(loss)

        # Clip, update, then keep the temperature in range
        self.stats['grad_norm'] = clip_grad_norm(self.optimizer.params, self.cfg.grad_clip)
        self.optimizer.step(lr_t)
        self.model.clamp_logit_scale()
        self.optimizer.zero_grad()
        return loss_value

    def train(self):
        """Run total_steps steps.

        Returns:
            List of metric rows {step, loss, lr, elapsed}
        """
        cfg = self.cfg
        start = time.perf_counter()
        if self.checkpoints is not None and self.vocab is not None:
            self.checkpoints.save_vocab(self.vocab)

        logger.info(
            f"Training for {cfg.total_steps} steps (batch {cfg.batch_size}, peak lr {cfg.peak_lr}, "
            f"warmup {cfg.warmup_steps})"
        )
        self._notify_listeners(TrainingEvent.TRAINING_STARTED, {'total_steps': cfg.total_steps})

        stream = self.dataset.batches(cfg.batch_size, cfg.seed)
        try:
            with BatchPrefetcher(stream, cfg.total_steps) as prefetcher:
                for step, batch in enumerate(prefetcher, start=1):
                    self.step = step
                    lr_t = lr_schedule(step, cfg)
                    step_start = time.perf_counter()
                    loss_value = self.train_step(batch, lr_t)
                    elapsed = time.perf_counter() - start

                    # Update stats
                    self.stats.update({
                        'step': step,
                        'loss': loss_value,
                        'lr': lr_t,
                        'step_time': time.perf_counter() - step_start,
                        'elapsed': elapsed,
                    })
                    self._notify_listeners(TrainingEvent.STEP_COMPLETED, dict(self.stats))

                    # Log metrics
                    if step % cfg.log_every == 0 or step == 1 or step == cfg.total_steps:
                        row = {'step': step, 'loss': loss_value, 'lr': lr_t, 'elapsed': elapsed}
                        self.metrics.append(row)
                        logger.debug(f"step {step}: loss {loss_value:.6f}, lr {lr_t:.3g}")
                        self._notify_listeners(TrainingEvent.METRICS_LOGGED, row)

                    # Periodic checkpoint
                    if self.checkpoints is not None and step % cfg.checkpoint_every == 0:
                        path = self.checkpoints.save(self.model, step)
                        self._notify_listeners(TrainingEvent.CHECKPOINT_SAVED, {'step': step, 'path': path})
        except NonFiniteError as e:
            last_good = self.checkpoints.last_good if self.checkpoints is not None else None
            logger.error(f"Non-finite value at step {self.step}: {e}")
            self._notify_listeners(TrainingEvent.TRAINING_HALTED, {'step': self.step, 'error': str(e)})
            self._write_metrics()
            raise TrainingError(f"Training halted at step {self.step}: {e}", last_good)

        # Final checkpoint and metrics
        if self.checkpoints is not None:
            path = self.checkpoints.save_final(self.model, self.step)
            self._notify_listeners(TrainingEvent.CHECKPOINT_SAVED, {'step': self.step, 'path': path})
        self._write_metrics()

        logger.info(f"Training finished after {self.step} steps in {time.perf_counter() - start:.1f}s")
        self._notify_listeners(TrainingEvent.TRAINING_FINISHED, {'step': self.step})
        return self.metrics

    def _write_metrics(self):
        if self.out_dir is not None:
            write_metrics_csv(self.checkpoints.out_dir / "metrics.csv", self.metrics)


def in_batch_accuracy(model, dataset, batch_size, seed=0, max_batches=None):
    """Mean in-batch retrieval accuracy over one epoch, in eval mode.

    Args:
        model: Model
        dataset: PairDataset
        batch_size: Pairs per batch (defines the candidate set)
        seed: Epoch shuffle seed
        max_batches: Optional cap on batches evaluated

    Returns:
        Share of rows whose nearest partner is their own positive
    """
    model.eval()
    scores = []
    with no_grad():
        for i, batch in enumerate(dataset.epoch_batches(batch_size, 0, seed)):
            if max_batches is not None and i >= max_batches:
                break
            a_vecs = model.encode(batch.ids_a, batch.mask_a)
            b_vecs = model.encode(batch.ids_b, batch.mask_b)
            scores.append(retrieval_accuracy(a_vecs, b_vecs))
    model.train()
    return float(np.mean(scores))


def train_loop(model, dataset, train_cfg, out_dir=None, vocab=None):
    """Train a model contrastively.

    Args:
        model: Model (updated in place)
        dataset: PairDataset of matched pairs
        train_cfg: TrainConfig
        out_dir: Optional run directory
        vocab: Optional Vocab saved with the checkpoints

    Returns:
        (model, metrics log)
    """
    trainer = Trainer(model, dataset, train_cfg, out_dir, vocab)
    metrics = trainer.train()
    return model, metrics
