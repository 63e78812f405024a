"""Procedural scenes of textured fronto-parallel planes.

Textures are functions of frame-t pixel coordinates, so a point keeps its
colour in every view. Frame t is rendered directly; source frames are
ray-cast from the moved camera, nearest hit winning.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from scat_depth.autograd.tensor import Tensor
from scat_depth.geometry import CameraModel, DepthMap, PoseSE3, pixel_coordinates, rotation_matrix_numpy

logger = logging.getLogger(__name__)

FOREGROUND_DEPTH = (2.0, 30.0)
BACKGROUND_DEPTH = (35.0, 50.0)
PLANE_COUNT = (3, 8)
MAX_TRANSLATION = 0.5
MAX_ROTATION_DEG = 3.0
TEXTURE_PERIOD = (48.0, 96.0)
TEXTURE_AMPLITUDE = 0.15
TEXTURE_WAVES = 3


@dataclass
class Plane:
    depth: float
    # (u0, v0, u1, v1) in frame-t pixels; None means unbounded
    rect: Optional[Tuple[float, float, float, float]]
    base_color: np.ndarray
    amplitudes: np.ndarray
    periods: np.ndarray
    angles: np.ndarray
    phases: np.ndarray
    channel_weights: np.ndarray

    def covers(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.rect is None:
            return np.ones(np.broadcast(u, v).shape, dtype=bool)
        u0, v0, u1, v1 = self.rect
        return (u >= u0) & (u <= u1) & (v >= v0) & (v <= v1)

    def texture(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """[3, ...] colour at frame-t pixel coordinates (u, v)."""
        color = np.broadcast_to(self.base_color.reshape(3, *([1] * u.ndim)), (3,) + u.shape).copy()
        for amp, period, angle, phase, weights in zip(
            self.amplitudes, self.periods, self.angles, self.phases, self.channel_weights
        ):
            wave = np.sin(2.0 * np.pi * (u * np.cos(angle) + v * np.sin(angle)) / period + phase)
            color += amp * weights.reshape(3, *([1] * u.ndim)) * wave
        return color


@dataclass
class SceneSample:
    """Frame triplet (t-1, t, t+1) with frame-t ground truth.

    ``gt_poses`` map frame-t points into frames t-1 and t+1. ``consistency``
    marks target pixels whose bilinear footprint in each source frame sees the
    same plane as the target pixel.
    """

    frames: np.ndarray
    gt_depth: np.ndarray
    gt_poses: List[PoseSE3]
    camera: CameraModel
    seed: int
    consistency: Optional[np.ndarray] = None
    plane_index: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def prev(self) -> np.ndarray:
        return self.frames[0]

    @property
    def target(self) -> np.ndarray:
        return self.frames[1]

    @property
    def next(self) -> np.ndarray:
        return self.frames[2]

    def sources(self) -> List[np.ndarray]:
        return [self.frames[0], self.frames[2]]

    def depth_map(self) -> DepthMap:
        return DepthMap(Tensor(self.gt_depth[None, None]))


def _random_plane(rng: np.random.Generator, camera: CameraModel, background: bool) -> Plane:
    if background:
        depth = rng.uniform(*BACKGROUND_DEPTH)
        rect = None
    else:
        depth = rng.uniform(*FOREGROUND_DEPTH)
        w, h = camera.width, camera.height
        pw = rng.uniform(0.15, 0.6) * w
        ph = rng.uniform(0.2, 0.8) * h
        u0 = rng.uniform(-0.1 * w, w - 0.5 * pw)
        v0 = rng.uniform(-0.1 * h, h - 0.5 * ph)
        rect = (u0, v0, u0 + pw, v0 + ph)

    shares = rng.uniform(0.2, 1.0, size=TEXTURE_WAVES)
    amplitudes = TEXTURE_AMPLITUDE * shares / shares.sum()
    return Plane(
        depth=depth,
        rect=rect,
        base_color=rng.uniform(0.2, 0.8, size=3),
        amplitudes=amplitudes,
        periods=rng.uniform(*TEXTURE_PERIOD, size=TEXTURE_WAVES),
        angles=rng.uniform(0.0, np.pi, size=TEXTURE_WAVES),
        phases=rng.uniform(0.0, 2.0 * np.pi, size=TEXTURE_WAVES),
        channel_weights=rng.uniform(0.5, 1.0, size=(TEXTURE_WAVES, 3)),
    )


def _random_motion(rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = np.deg2rad(rng.uniform(0.0, MAX_ROTATION_DEG))
    direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    translation = direction * rng.uniform(0.0, MAX_TRANSLATION)
    return axis * angle, translation


def render_target(planes: List[Plane], camera: CameraModel) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Frame t, its depth map and the index of the visible plane per pixel."""
    h, w = camera.height, camera.width
    v, u = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    depth = np.full((h, w), np.inf)
    index = np.full((h, w), -1, dtype=np.int64)
    for i, plane in enumerate(planes):
        closer = plane.covers(u, v) & (plane.depth < depth)
        depth[closer] = plane.depth
        index[closer] = i
    image = np.zeros((3, h, w))
    for i, plane in enumerate(planes):
        hit = index == i
        if hit.any():
            image[:, hit] = plane.texture(u[hit], v[hit])
    return image, depth, index


def render_source(
    planes: List[Plane], camera: CameraModel, axis_angle: np.ndarray, translation: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Ray-cast the view of a camera whose frame is X_src = R X_t + t."""
    h, w = camera.height, camera.width
    rotation = rotation_matrix_numpy(axis_angle)[0]
    centre = -rotation.T @ translation
    rays = rotation.T @ (camera.inverse_matrix() @ pixel_coordinates(h, w))

    best = np.full(h * w, np.inf)
    index = np.full(h * w, -1, dtype=np.int64)
    hit_u = np.zeros(h * w)
    hit_v = np.zeros(h * w)
    for i, plane in enumerate(planes):
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = (plane.depth - centre[2]) / rays[2]
        points = centre[:, None] + lam[None, :] * rays
        u = camera.fx * points[0] / plane.depth + camera.cx
        v = camera.fy * points[1] / plane.depth + camera.cy
        hit = (lam > 0) & np.isfinite(lam) & plane.covers(u, v) & (lam < best)
        best[hit] = lam[hit]
        index[hit] = i
        hit_u[hit] = u[hit]
        hit_v[hit] = v[hit]

    image = np.zeros((3, h * w))
    for i, plane in enumerate(planes):
        sel = index == i
        if sel.any():
            image[:, sel] = plane.texture(hit_u[sel], hit_v[sel])
    return image.reshape(3, h, w), index.reshape(h, w)


def consistency_mask(
    target_index: np.ndarray,
    source_index: np.ndarray,
    depth: np.ndarray,
    camera: CameraModel,
    axis_angle: np.ndarray,
    translation: np.ndarray,
) -> np.ndarray:
    """Target pixels whose four bilinear neighbours in the source see the same plane."""
    h, w = camera.height, camera.width
    rotation = rotation_matrix_numpy(axis_angle)[0]
    points = (camera.inverse_matrix() @ pixel_coordinates(h, w)) * depth.reshape(1, -1)
    moved = rotation @ points + translation[:, None]
    z = moved[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        x = camera.fx * moved[0] / z + camera.cx
        y = camera.fy * moved[1] / z + camera.cy
    inside = (z > 0) & (x >= 0) & (x <= w - 1) & (y >= 0) & (y <= h - 1)

    x0 = np.clip(np.floor(np.where(inside, x, 0)), 0, w - 2).astype(np.int64)
    y0 = np.clip(np.floor(np.where(inside, y, 0)), 0, h - 2).astype(np.int64)
    own = target_index.reshape(-1)
    same = np.ones(h * w, dtype=bool)
    for dy in (0, 1):
        for dx in (0, 1):
            same &= source_index[y0 + dy, x0 + dx] == own
    return (inside & same).reshape(h, w)


def generate_scene(seed: int, camera: CameraModel) -> SceneSample:
    """Deterministic frame triplet with exact ground truth for ``seed``."""
    rng = np.random.default_rng(seed)
    count = int(rng.integers(PLANE_COUNT[0], PLANE_COUNT[1] + 1))
    planes = [_random_plane(rng, camera, background=True)]
    planes += [_random_plane(rng, camera, background=False) for _ in range(count - 1)]

    target, depth, target_index = render_target(planes, camera)

    frames = [None, target, None]
    poses: List[PoseSE3] = []
    masks = []
    for slot in (0, 2):
        axis_angle, translation = _random_motion(rng)
        image, source_index = render_source(planes, camera, axis_angle, translation)
        frames[slot] = image
        poses.append(PoseSE3.from_arrays(axis_angle, translation))
        masks.append(consistency_mask(target_index, source_index, depth, camera, axis_angle, translation))

    logger.debug(f"Generated scene seed={seed} with {count} planes")
    return SceneSample(
        frames=np.stack(frames),
        gt_depth=depth,
        gt_poses=poses,
        camera=camera,
        seed=seed,
        consistency=np.stack(masks),
        plane_index=target_index,
    )


def to_batch(samples: List[SceneSample]) -> Tuple[Tensor, Tensor, Tensor]:
    """Stack samples into (prev, target, next) tensors of shape [N,3,H,W]."""
    frames = np.stack([s.frames for s in samples])
    return Tensor(frames[:, 0]), Tensor(frames[:, 1]), Tensor(frames[:, 2])
