"""
PETE - Training Package
"""

from training.config import TrainConfig
from training.loss import info_nce_loss, retrieval_accuracy
from training.optimizer import OptimizerState, AdamW, adamw_step, clip_grad_norm
from training.schedule import lr_schedule
from training.trainer import Trainer, train_loop, in_batch_accuracy, ema
