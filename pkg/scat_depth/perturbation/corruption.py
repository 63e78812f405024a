from typing import List

import numpy as np

from scat_depth.autograd.tensor import Tensor
from scat_depth.perturbation.base import BasePerturbation
from scat_depth.synthworld.corruptions import CORRUPTION_KINDS, SEVERITIES, CorruptionSpec, corrupt, create_corruption

# fog needs ground-truth depth, which self-supervised training does not have
AUGMENTATION_KINDS = tuple(k for k in CORRUPTION_KINDS if not create_corruption(k).needs_depth)


class CorruptionPerturbation(BasePerturbation):
    """Offline augmentation: each branch applies a randomly drawn corruption to the batch."""

    def sample(self, image: Tensor, count: int, step: int) -> List[Tensor]:
        clean = np.asarray(image.numpy(), dtype=np.float64)
        deltas = []
        for k in range(count):
            branch_seed = self.branch_seed(step, k)
            rng = np.random.default_rng(branch_seed)
            spec = CorruptionSpec(
                kind=str(rng.choice(AUGMENTATION_KINDS)), severity=int(rng.choice(SEVERITIES))
            )
            deltas.append(Tensor(corrupt(clean, spec, branch_seed) - clean))
        return deltas
