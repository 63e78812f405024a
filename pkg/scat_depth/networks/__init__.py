from scat_depth.networks.base import Module
from scat_depth.networks.depth import ScalingDepthNet
from scat_depth.networks.factory import create_depth_network, create_generator, create_pose_network
from scat_depth.networks.generator import PerturbationGenerator, scaled_epsilon, snapshot
from scat_depth.networks.pose import PoseNet

__all__ = [
    "Module",
    "ScalingDepthNet",
    "PoseNet",
    "PerturbationGenerator",
    "scaled_epsilon",
    "snapshot",
    "create_depth_network",
    "create_pose_network",
    "create_generator",
]
