import logging
from typing import List

from scat_depth.autograd.tensor import Tensor
from scat_depth.networks.generator import PerturbationGenerator, snapshot
from scat_depth.perturbation.base import LIVE, BasePerturbation
from scat_depth.surgery.buffer import GeneratorBuffer

logger = logging.getLogger(__name__)


class GeneratorPerturbation(BasePerturbation):
    """Learned perturbations: frozen snapshots from the history buffer plus the live generator."""

    learnable = True

    def __init__(self, generator: PerturbationGenerator, buffer: GeneratorBuffer, seed: int = 0):
        super().__init__(generator.epsilon, seed)
        self.generator = generator
        self.buffer = buffer

    def sample(self, image: Tensor, count: int, step: int) -> List[Tensor]:
        snapshots = self.buffer.sample(count)
        if not snapshots:
            logger.debug(f"Step {step}: history buffer empty, no adversarial branches")
        return [g(image, self.branch_seed(step, k)).detach() for k, g in enumerate(snapshots)]

    def live(self, image: Tensor, step: int) -> Tensor:
        return self.generator(image, self.branch_seed(step, 0, LIVE))

    def snapshot(self, tag: int) -> None:
        self.buffer.add(snapshot(self.generator, tag))
        logger.debug(f"Buffered generator v{tag}; buffer size {len(self.buffer)}")
