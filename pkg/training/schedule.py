"""
PETE - Learning Rate Schedule
-----------------------------
Linear warmup from 0 to the peak rate, then constant.
"""

from exceptions import ConfigError


def lr_schedule(step, cfg):
    """Learning rate at a given step.

    Args:
        step: Step in [0, total_steps]
        cfg: TrainConfig

    Returns:
        peak_lr * step / warmup_steps during warmup, peak_lr afterwards
    """
    if not 0 <= step <= cfg.total_steps:
        raise ConfigError(f"step {step} outside [0, {cfg.total_steps}]")
    if cfg.warmup_steps > 0 and step < cfg.warmup_steps:
        return cfg.peak_lr * step / cfg.warmup_steps
    return cfg.peak_lr
