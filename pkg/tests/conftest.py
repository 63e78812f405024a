import pytest

from scat_depth.geometry import CameraModel
from scat_depth.synthworld.scene import generate_scene
from scat_depth.trainer.config import TrainConfig

TINY_WIDTHS = (4, 8)


@pytest.fixture(scope="session")
def tiny_camera():
    return CameraModel.default(16, 32)


@pytest.fixture(scope="session")
def tiny_config():
    return TrainConfig(
        epochs=2,
        batch_size=2,
        sample_j=2,
        buffer_capacity=3,
        depth_widths=TINY_WIDTHS,
        pose_widths=TINY_WIDTHS,
        generator_widths=TINY_WIDTHS,
        seed=0,
    )


@pytest.fixture(scope="session")
def tiny_scenes(tiny_camera):
    return [generate_scene(seed, tiny_camera) for seed in range(4)]
