"""Pinhole camera, rigid poses and the differentiable inverse warp.

Pose convention: a :class:`PoseSE3` maps points expressed in the target
(frame t) camera into the source camera, ``X_src = R @ X_t + t``.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from scat_depth.autograd import ops
from scat_depth.autograd.ops import snap_tolerance
from scat_depth.autograd.tensor import Tensor

logger = logging.getLogger(__name__)

DEFAULT_MIN_DEPTH = 0.1
DEFAULT_MAX_DEPTH = 100.0
PROJECTION_EPS = 1e-3


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("width", "height"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"Focal lengths must be > 0, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(
                f"Principal point ({self.cx}, {self.cy}) outside a {self.width}x{self.height} image"
            )

    @classmethod
    def default(cls, height: int, width: int) -> "CameraModel":
        """Intrinsics with the proportions of a wide driving camera."""
        return cls(fx=0.58 * width, fy=1.92 * height, cx=0.5 * width, cy=0.5 * height, width=width, height=height)

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]],
            dtype=np.float64,
        )

    def inverse_matrix(self) -> np.ndarray:
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ],
            dtype=np.float64,
        )


@dataclass
class PoseSE3:
    axis_angle: Tensor
    translation: Tensor

    def __post_init__(self):
        if self.axis_angle.ndim != 2 or self.axis_angle.shape[1] != 3:
            raise ValueError(f"axis_angle must be [N,3], got {self.axis_angle.shape}")
        if self.translation.shape != self.axis_angle.shape:
            raise ValueError(
                f"translation shape {self.translation.shape} != axis_angle shape {self.axis_angle.shape}"
            )

    @property
    def batch(self) -> int:
        return self.axis_angle.shape[0]

    @classmethod
    def identity(cls, batch: int = 1) -> "PoseSE3":
        return cls(Tensor(np.zeros((batch, 3))), Tensor(np.zeros((batch, 3))))

    @classmethod
    def from_arrays(cls, axis_angle: np.ndarray, translation: np.ndarray) -> "PoseSE3":
        return cls(Tensor(np.atleast_2d(axis_angle)), Tensor(np.atleast_2d(translation)))

    @classmethod
    def from_vector(cls, raw: Tensor) -> "PoseSE3":
        """Split a [N,6] (axis_angle, translation) vector."""
        return cls(raw[:, 0:3], raw[:, 3:6])

    def inverse(self) -> "PoseSE3":
        """Inverse transform, detached from any tape."""
        rotation = rotation_matrix_numpy(self.axis_angle.numpy())
        t = np.asarray(self.translation.numpy(), dtype=np.float64)
        t_inv = -np.einsum("nji,nj->ni", rotation, t)
        return PoseSE3.from_arrays(-np.asarray(self.axis_angle.numpy(), dtype=np.float64), t_inv)


@dataclass
class DepthMap:
    values: Tensor
    min_depth: float = DEFAULT_MIN_DEPTH
    max_depth: float = DEFAULT_MAX_DEPTH

    def __post_init__(self):
        if self.values.ndim != 4 or self.values.shape[1] != 1:
            raise ValueError(f"DepthMap values must be [N,1,H,W], got {self.values.shape}")


def rotation_and_translation(pose: PoseSE3) -> Tuple[Tensor, Tensor]:
    """Rodrigues rotation R = I + A*K + B*K^2 and translation as [N,3,1]."""
    r = pose.axis_angle
    n = pose.batch
    theta_sq = ops.sum(r * r, axis=1)
    a = ops.sin_over_theta(theta_sq).reshape(n, 1, 1)
    b = ops.one_minus_cos_over_theta_sq(theta_sq).reshape(n, 1, 1)
    k = ops.skew(r)
    rotation = Tensor(np.eye(3)[None]) + a * k + b * ops.matmul(k, k)
    return rotation, pose.translation.reshape(n, 3, 1)


def axis_angle_to_matrix(pose: PoseSE3) -> Tensor:
    """[N,4,4] rigid transforms; differentiable in both pose fields."""
    rotation, translation = rotation_and_translation(pose)
    top = ops.concat([rotation, translation], axis=2)
    bottom = Tensor(np.tile(np.array([[[0.0, 0.0, 0.0, 1.0]]]), (pose.batch, 1, 1)))
    return ops.concat([top, bottom], axis=1)


def rotation_matrix_numpy(axis_angle: np.ndarray) -> np.ndarray:
    """Float64 [N,3,3] rotations for data generation and oracles."""
    r = np.atleast_2d(np.asarray(axis_angle, dtype=np.float64))
    theta = np.linalg.norm(r, axis=1)
    out = np.tile(np.eye(3), (r.shape[0], 1, 1))
    for i, (vec, angle) in enumerate(zip(r, theta)):
        if angle == 0:
            continue
        axis = vec / angle
        k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
        out[i] = np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)
    return out


def disp_to_depth(disp: Tensor, min_depth: float = DEFAULT_MIN_DEPTH, max_depth: float = DEFAULT_MAX_DEPTH) -> DepthMap:
    """Map sigmoid disparity in [0,1] to depth in [min_depth, max_depth]."""
    if not 0 < min_depth < max_depth:
        raise ValueError(f"Depth bounds need 0 < min_depth < max_depth, got {min_depth}, {max_depth}")
    min_disp = 1.0 / max_depth
    max_disp = 1.0 / min_depth
    scaled = ops.scalar_mul(disp, max_disp - min_disp) + min_disp
    return DepthMap(1.0 / scaled, min_depth=min_depth, max_depth=max_depth)


def pixel_coordinates(height: int, width: int) -> np.ndarray:
    """Homogeneous pixel centres as [3, H*W], row-major."""
    v, u = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    return np.stack([u.ravel(), v.ravel(), np.ones(height * width)], axis=0)


def identity_grid(batch: int, height: int, width: int) -> np.ndarray:
    """Normalized [-1,1] grid that samples every pixel at itself, [N,H,W,2]."""
    xs = np.linspace(-1.0, 1.0, width)
    ys = np.linspace(-1.0, 1.0, height)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.broadcast_to(np.stack([gx, gy], axis=-1), (batch, height, width, 2)).copy()


def project(depth: DepthMap, pose: PoseSE3, camera: CameraModel) -> Tuple[Tensor, Tensor]:
    """Sampling grid of target pixels in the source view.

    Returns:
        (grid [N,H,W,2] in normalized coordinates, valid mask [N,1,H,W] of 0/1)
    """
    values = depth.values
    n, _, h, w = values.shape
    if (h, w) != (camera.height, camera.width):
        raise ValueError(f"Depth map {h}x{w} does not match camera {camera.height}x{camera.width}")
    if pose.batch != n:
        raise ValueError(f"Pose batch {pose.batch} != depth batch {n}")

    rays = Tensor((camera.inverse_matrix() @ pixel_coordinates(h, w))[None])
    points = rays * values.reshape(n, 1, h * w)
    rotation, translation = rotation_and_translation(pose)
    moved = ops.matmul(rotation, points) + translation

    z = moved[:, 2:3, :]
    z_safe = ops.clamp(z, low=PROJECTION_EPS)
    x = ops.scalar_mul(moved[:, 0:1, :] / z_safe, camera.fx) + camera.cx
    y = ops.scalar_mul(moved[:, 1:2, :] / z_safe, camera.fy) + camera.cy

    gx = ops.scalar_mul(x, 2.0 / (w - 1)) - 1.0
    gy = ops.scalar_mul(y, 2.0 / (h - 1)) - 1.0
    grid = ops.concat([gx.reshape(n, h, w, 1), gy.reshape(n, h, w, 1)], axis=3)

    tol = snap_tolerance()
    xs, ys, zs = x.numpy(), y.numpy(), z.numpy()
    valid = (
        (zs > PROJECTION_EPS)
        & (xs >= -tol) & (xs <= w - 1 + tol)
        & (ys >= -tol) & (ys <= h - 1 + tol)
    )
    mask = Tensor(valid.reshape(n, 1, h, w).astype(np.float64))
    return grid, mask


def inverse_warp(
    source: Tensor, depth: DepthMap, pose: PoseSE3, camera: CameraModel
) -> Tuple[Tensor, Tensor]:
    """Synthesize the target view from ``source``; returns (image, valid mask)."""
    if source.ndim != 4 or source.shape[2:] != depth.values.shape[2:]:
        raise ValueError(f"Source image {source.shape} does not match depth {depth.values.shape}")
    grid, mask = project(depth, pose, camera)
    return ops.grid_sample(source, grid), mask
