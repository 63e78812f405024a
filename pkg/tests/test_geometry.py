import numpy as np
import pytest

from scat_depth.autograd import Tensor, finite_difference_check, precision
from scat_depth.autograd import ops
from scat_depth.geometry import (
    CameraModel,
    DepthMap,
    PoseSE3,
    axis_angle_to_matrix,
    disp_to_depth,
    inverse_warp,
    rotation_matrix_numpy,
)
from scat_depth.photometric import LossWeights, masked_mean, pe
from scat_depth.synthworld.scene import generate_scene


@pytest.fixture(scope="module")
def camera():
    return CameraModel.default(32, 96)


@pytest.fixture(scope="module")
def scenes(camera):
    return [generate_scene(seed, camera) for seed in range(6)]


def test_camera_validation():
    with pytest.raises(ValueError):
        CameraModel(fx=0.0, fy=10.0, cx=5.0, cy=5.0, width=10, height=10)
    with pytest.raises(ValueError):
        CameraModel(fx=10.0, fy=10.0, cx=12.0, cy=5.0, width=10, height=10)


def test_camera_stores_plain_scalars():
    camera = CameraModel(
        fx=np.float64(18.5), fy=np.float32(30.0), cx=np.float64(16.0), cy=np.float64(8.0),
        width=np.int64(32), height=np.int64(16),
    )
    assert type(camera.fx) is float and type(camera.fy) is float
    assert type(camera.width) is int and type(camera.height) is int
    assert repr(camera.fx) == "18.5"


def test_camera_inverse_matrix(camera):
    assert np.allclose(camera.matrix() @ camera.inverse_matrix(), np.eye(3))


def test_rotation_matrix_matches_differentiable_form():
    r = np.array([[0.1, -0.2, 0.3], [0.0, 0.0, 0.0]])
    with precision(np.float64):
        transform = axis_angle_to_matrix(PoseSE3.from_arrays(r, np.zeros((2, 3)))).numpy()
    expected = rotation_matrix_numpy(r)
    assert np.allclose(transform[:, :3, :3], expected, atol=1e-12)
    assert np.allclose(expected[0] @ expected[0].T, np.eye(3))


def test_pose_inverse_composes_to_identity():
    pose = PoseSE3.from_arrays(np.array([0.05, 0.02, -0.03]), np.array([0.1, -0.2, 0.3]))
    with precision(np.float64):
        forward = axis_angle_to_matrix(pose).numpy()[0]
        backward = axis_angle_to_matrix(pose.inverse()).numpy()[0]
    assert np.allclose(forward @ backward, np.eye(4), atol=1e-6)


def test_pose_shape_validation():
    with pytest.raises(ValueError):
        PoseSE3(Tensor(np.zeros((2, 3))), Tensor(np.zeros((1, 3))))


def test_disp_to_depth_bounds():
    disp = Tensor(np.array([0.0, 1.0]).reshape(1, 1, 1, 2))
    with precision(np.float64):
        depth = disp_to_depth(disp, 0.1, 100.0).values.numpy().ravel()
    assert np.allclose(depth, [100.0, 0.1])
    with pytest.raises(ValueError):
        disp_to_depth(disp, 1.0, 0.5)


def test_identity_warp_is_exact(camera):
    rng = np.random.default_rng(3)
    source = Tensor(rng.uniform(size=(2, 3, camera.height, camera.width)))
    depth = DepthMap(Tensor(rng.uniform(1.0, 40.0, size=(2, 1, camera.height, camera.width))))
    warped, mask = inverse_warp(source, depth, PoseSE3.identity(2), camera)

    assert np.array_equal(warped.numpy(), source.numpy()), "Identity pose must reproduce the source"
    assert mask.numpy().all(), "Every pixel is valid under the identity pose"


def test_ground_truth_warp_reconstructs_target(camera, scenes):
    errors = []
    with precision(np.float64):
        for scene in scenes:
            target = scene.target
            depth = scene.depth_map()
            for slot, (source, pose) in enumerate(zip(scene.sources(), scene.gt_poses)):
                warped, mask = inverse_warp(Tensor(source[None]), depth, pose, camera)
                valid = mask.numpy()[0, 0].astype(bool) & scene.consistency[slot]
                assert valid.mean() > 0.5, f"Scene {scene.seed}: too few comparable pixels"
                diff = np.abs(warped.numpy()[0] - target)[:, valid]
                errors.append(diff.mean())
    assert max(errors) < 1e-3, f"Mean reconstruction errors {errors}"


def test_photometric_loss_is_near_zero_on_ground_truth(camera, scenes):
    scene = scenes[0]
    with precision(np.float64):
        warped, mask = inverse_warp(Tensor(scene.prev[None]), scene.depth_map(), scene.gt_poses[0], camera)
        valid = mask * Tensor(scene.consistency[0][None, None].astype(np.float64))
        error = masked_mean(pe(Tensor(scene.target[None]), warped, LossWeights(alpha=0.0)), valid).item()
    assert error < 1e-3


def test_warp_pipeline_gradcheck():
    camera = CameraModel.default(8, 8)
    rng = np.random.default_rng(7)
    source = rng.uniform(size=(1, 3, 8, 8))
    target = rng.uniform(size=(1, 3, 8, 8))
    depth = rng.uniform(3.0, 6.0, size=(1, 1, 8, 8))
    pose_raw = np.array([[0.01, -0.02, 0.015, 0.05, -0.03, 0.02]])

    def loss_of_depth(d):
        pose = PoseSE3.from_arrays(pose_raw[:, :3], pose_raw[:, 3:])
        warped, mask = inverse_warp(Tensor(source), DepthMap(d), pose, camera)
        return masked_mean(pe(Tensor(target), warped, LossWeights(alpha=0.85)), mask)

    def loss_of_pose(p):
        pose = PoseSE3.from_vector(p)
        warped, mask = inverse_warp(Tensor(source), DepthMap(Tensor(depth)), pose, camera)
        return masked_mean(pe(Tensor(target), warped, LossWeights(alpha=0.85)), mask)

    assert finite_difference_check(loss_of_depth, depth) < 1e-3
    assert finite_difference_check(loss_of_pose, pose_raw) < 1e-3


def test_warp_rejects_mismatched_camera(camera):
    depth = DepthMap(Tensor(np.ones((1, 1, 8, 8))))
    with pytest.raises(ValueError):
        inverse_warp(Tensor(np.zeros((1, 3, 8, 8))), depth, PoseSE3.identity(1), camera)


def test_depth_map_shape_validation():
    with pytest.raises(ValueError):
        DepthMap(Tensor(np.ones((1, 8, 8))))


def test_grid_sample_shape_validation():
    with pytest.raises(ValueError):
        ops.grid_sample(Tensor(np.zeros((1, 3, 4, 4))), Tensor(np.zeros((1, 4, 4, 3))))
