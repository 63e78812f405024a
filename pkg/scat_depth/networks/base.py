import copy
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Iterable, Mapping, Tuple

import numpy as np

from scat_depth.autograd import ops
from scat_depth.autograd.tensor import Tensor

logger = logging.getLogger(__name__)


class Module(ABC):
    """Named, ordered collection of trainable tensors plus a forward pass.

    Parameters are immutable tensors; an update replaces them wholesale via
    :meth:`load_state_dict`.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.params: Dict[str, Tensor] = {}
        self.trainable = True
        self._rng = np.random.default_rng(seed)

    def add_conv(self, name: str, in_channels: int, out_channels: int, kernel: int = 3, zero: bool = False) -> None:
        """Register ``{name}.weight`` [F,C,k,k] and ``{name}.bias`` [F] with uniform fan-in init."""
        fan_in = in_channels * kernel * kernel
        bound = 1.0 / np.sqrt(fan_in)
        shape = (out_channels, in_channels, kernel, kernel)
        weight = np.zeros(shape) if zero else self._rng.uniform(-bound, bound, size=shape)
        bias = np.zeros(out_channels) if zero else self._rng.uniform(-bound, bound, size=out_channels)
        self.params[f"{name}.weight"] = Tensor(weight, requires_grad=True)
        self.params[f"{name}.bias"] = Tensor(bias, requires_grad=True)

    def conv(self, name: str, x: Tensor) -> Tensor:
        weight = self.params[f"{name}.weight"]
        bias = self.params[f"{name}.bias"]
        out = ops.conv2d(x, weight, stride=1, padding=weight.shape[-1] // 2)
        return out + bias.reshape(1, bias.shape[0], 1, 1)

    def conv_elu(self, name: str, x: Tensor) -> Tensor:
        return ops.elu(self.conv(name, x))

    @abstractmethod
    def forward(self, *inputs: Tensor, **options: Any) -> Any:
        raise NotImplementedError

    def __call__(self, *inputs: Tensor, **options: Any) -> Any:
        return self.forward(*inputs, **options)

    def parameters(self) -> Dict[str, Tensor]:
        return self.params

    def named_shapes(self) -> Iterable[Tuple[str, Tuple[int, ...]]]:
        return ((name, t.shape) for name, t in self.params.items())

    def num_parameters(self) -> int:
        return int(sum(t.data.size for t in self.params.values()))

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.numpy().copy() for name, t in self.params.items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        missing = set(self.params) - set(state)
        unexpected = set(state) - set(self.params)
        if missing or unexpected:
            raise ValueError(f"State dict mismatch: missing {sorted(missing)}, unexpected {sorted(unexpected)}")
        for name, value in state.items():
            if value.shape != self.params[name].shape:
                raise ValueError(f"Shape mismatch for {name}: {value.shape} vs {self.params[name].shape}")
            self.params[name] = Tensor(value, requires_grad=self.trainable)

    def freeze(self) -> None:
        self.trainable = False
        self.params = {name: t.detach() for name, t in self.params.items()}

    def clone(self) -> "Module":
        return copy.deepcopy(self)
