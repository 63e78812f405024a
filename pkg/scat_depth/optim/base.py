from abc import ABC, abstractmethod
from typing import Dict, Mapping

import numpy as np

from scat_depth.networks.base import Module


class BaseOptimizer(ABC):
    """First-order update rule over a module's named parameters.

    ``maximize`` turns the rule into gradient ascent.
    """

    def __init__(self, lr: float, maximize: bool = False):
        if lr <= 0:
            raise ValueError(f"Learning rate must be > 0, got {lr}")
        self.lr = lr
        self.maximize = maximize

    def step(self, module: Module, grads: Mapping[str, np.ndarray]) -> None:
        params = module.state_dict()
        direction = {name: (-grads[name] if self.maximize else grads[name]) for name in params}
        module.load_state_dict(self.update(params, direction))

    @abstractmethod
    def update(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """New parameter values for a descent step along ``grads``."""
        raise NotImplementedError

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        pass
