from abc import ABC, abstractmethod
from typing import List, Optional

import numpy as np

from scat_depth.autograd.tensor import Tensor

# salts keep sampled and live branches on separate seed streams
SAMPLED = 0
LIVE = 1


class BasePerturbation(ABC):
    """Source of additive input perturbations for the adversarial branches of a step."""

    learnable = False

    def __init__(self, epsilon: float, seed: int = 0):
        if epsilon < 0:
            raise ValueError(f"Perturbation radius must be >= 0, got {epsilon}")
        self.epsilon = float(epsilon)
        self.seed = int(seed)

    def branch_seed(self, step: int, branch: int, salt: int = SAMPLED) -> int:
        return int(np.random.SeedSequence([self.seed, step, branch, salt]).generate_state(1)[0])

    @abstractmethod
    def sample(self, image: Tensor, count: int, step: int) -> List[Tensor]:
        """Up to ``count`` constant perturbations shaped like ``image``."""
        raise NotImplementedError

    def live(self, image: Tensor, step: int) -> Optional[Tensor]:
        """Perturbation that is differentiable in learnable parameters, if any."""
        return None

    def snapshot(self, tag: int) -> None:
        """Record the current learnable state for later sampling."""
        return None
