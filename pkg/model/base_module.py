"""
PETE - Base Module
------------------
This module defines the base Module class from which all model parts inherit.
"""

import logging
from abc import ABC, abstractmethod

import numpy as np
from scipy.stats import truncnorm

import config
from core.tensor import Tensor
from exceptions import CheckpointError

logger = logging.getLogger(__name__)


def truncated_normal(rng, shape, std=config.INIT_STD):
    """Normal(0, std) samples truncated at +-2 std."""
    values = truncnorm.rvs(-2.0, 2.0, loc=0.0, scale=std, size=shape, random_state=rng)
    return np.asarray(values, dtype=config.TENSOR_DTYPE)


class BaseModule(ABC):
    """Abstract base class for all model modules.

    A module owns named parameters and named child modules. Names are joined
    with dots into the flat names used by checkpoints, and parameters are
    always listed in registration order.
    """

    def __init__(self, name="", rng=None):
        """Initialize the module.

        Args:
            name: Module name used in diagnostics
            rng: numpy Generator consumed by _init_parameters
        """
        self.name = name
        self.training = True
        self._parameters = {}
        self._children = {}

        # Create parameters and child modules
        self._init_parameters(rng if rng is not None else np.random.default_rng(config.SEED))

    @abstractmethod
    def _init_parameters(self, rng):
        """Create parameters and child modules."""
        pass

    @abstractmethod
    def forward(self, *args, **kwargs):
        """Run the module."""
        pass

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def add_parameter(self, name, values):
        """Register a trainable parameter.

        Args:
            name: Local parameter name
            values: Initial values

        Returns:
            The parameter Tensor
        """
        param = Tensor(values, requires_grad=True, name=f"{self.name}.{name}" if self.name else name)
        self._parameters[name] = param
        return param

    def add_child(self, name, module):
        self._children[name] = module
        return module

    def named_parameters(self, prefix=""):
        """List (dotted name, Tensor) pairs in registration order."""
        items = []
        for name, param in self._parameters.items():
            items.append((f"{prefix}{name}", param))
        for name, child in self._children.items():
            items.extend(child.named_parameters(prefix=f"{prefix}{name}."))
        return items

    def parameters(self):
        return [param for _, param in self.named_parameters()]

    def num_parameters(self):
        """Number of allocated parameter scalars."""
        return int(sum(param.size for param in self.parameters()))

    def train(self, mode=True):
        self.training = mode
        for child in self._children.values():
            child.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for param in self.parameters():
            param.zero_grad()

    def to_dict(self):
        """Copy of every parameter keyed by dotted name."""
        return {name: param.data.copy() for name, param in self.named_parameters()}

    def load_state_dict(self, state):
        """Replace parameter values from a name -> array mapping.

        Names and shapes are all validated before any value is written.

        Args:
            state: Dictionary as produced by to_dict
        """
        named = self.named_parameters()
        for name, param in named:
            if name not in state:
                raise CheckpointError(f"Missing tensor {name} (expected shape {list(param.shape)})")
            if tuple(np.shape(state[name])) != param.shape:
                raise CheckpointError(
                    f"Tensor {name} has shape {list(np.shape(state[name]))}, model expects {list(param.shape)}"
                )
        extra = sorted(set(state) - {name for name, _ in named})
        if extra:
            raise CheckpointError(f"Unexpected tensor {extra[0]} not present in the model")

        for name, param in named:
            param.data = np.array(state[name], dtype=param.dtype)
            param.grad = None

    def __str__(self):
        return f"{self.__class__.__name__}({self.name}, {self.num_parameters()} params)"
