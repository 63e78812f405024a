from typing import TYPE_CHECKING

from scat_depth.networks.depth import ScalingDepthNet
from scat_depth.networks.generator import PerturbationGenerator, scaled_epsilon
from scat_depth.networks.pose import PoseNet

if TYPE_CHECKING:
    from scat_depth.trainer.config import TrainConfig


def create_depth_network(config: "TrainConfig") -> ScalingDepthNet:
    kappa = config.kappa if config.enable_sdn else 1.0
    return ScalingDepthNet(widths=config.depth_widths, kappa=kappa, seed=config.seed)


def create_pose_network(config: "TrainConfig") -> PoseNet:
    return PoseNet(widths=config.pose_widths, seed=config.seed + 1)


def create_generator(config: "TrainConfig", height: int, width: int) -> PerturbationGenerator:
    epsilon = scaled_epsilon(config.epsilon_m, height, width)
    return PerturbationGenerator(epsilon=epsilon, widths=config.generator_widths, seed=config.seed + 2)
