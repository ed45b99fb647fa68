"""
PETE - Tensor Core Package
"""

from core.tensor import Tensor, Tape, backward, no_grad, current_tape
from core import ops
from core.gradcheck import grad_check, grad_check_param

__all__ = [
    "Tensor", "Tape", "backward", "no_grad", "current_tape", "ops",
    "grad_check", "grad_check_param",
]
