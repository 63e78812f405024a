from scat_depth.perturbation.adversarial import GeneratorPerturbation
from scat_depth.perturbation.base import BasePerturbation
from scat_depth.perturbation.corruption import CorruptionPerturbation
from scat_depth.perturbation.factory import create_perturbation
from scat_depth.perturbation.gaussian import GaussianPerturbation

__all__ = [
    "BasePerturbation",
    "CorruptionPerturbation",
    "GaussianPerturbation",
    "GeneratorPerturbation",
    "create_perturbation",
]
