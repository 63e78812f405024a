from typing import List

import numpy as np

from scat_depth.autograd.tensor import Tensor
from scat_depth.perturbation.base import BasePerturbation


class GaussianPerturbation(BasePerturbation):
    """Isotropic Gaussian noise rescaled to the same per-image L2 radius as the generator."""

    def sample(self, image: Tensor, count: int, step: int) -> List[Tensor]:
        deltas = []
        for k in range(count):
            if self.epsilon == 0.0:
                deltas.append(Tensor(np.zeros(image.shape)))
                continue
            rng = np.random.default_rng(self.branch_seed(step, k))
            noise = rng.standard_normal(image.shape)
            norms = np.linalg.norm(noise.reshape(noise.shape[0], -1), axis=1).reshape(-1, 1, 1, 1)
            deltas.append(Tensor(self.epsilon * noise / norms))
        return deltas
