from typing import Dict

import numpy as np

from scat_depth.optim.base import BaseOptimizer


class SGD(BaseOptimizer):
    def update(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        return {name: value - self.lr * grads[name] for name, value in params.items()}
