from typing import TYPE_CHECKING

from scat_depth.networks.generator import PerturbationGenerator
from scat_depth.perturbation.adversarial import GeneratorPerturbation
from scat_depth.perturbation.base import BasePerturbation
from scat_depth.perturbation.corruption import CorruptionPerturbation
from scat_depth.perturbation.gaussian import GaussianPerturbation
from scat_depth.surgery.buffer import GeneratorBuffer

if TYPE_CHECKING:
    from scat_depth.trainer.config import TrainConfig


def create_perturbation(
    config: "TrainConfig", generator: PerturbationGenerator, buffer: GeneratorBuffer
) -> BasePerturbation:
    strategy = config.perturbation
    seed = config.seed + 4
    if strategy == "generator":
        return GeneratorPerturbation(generator, buffer, seed=seed)
    if strategy == "gaussian":
        return GaussianPerturbation(generator.epsilon, seed=seed)
    if strategy == "corruption":
        return CorruptionPerturbation(generator.epsilon, seed=seed)
    raise ValueError(f"Unknown perturbation strategy: {strategy}")
