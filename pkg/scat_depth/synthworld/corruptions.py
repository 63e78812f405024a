"""Desk-scale corruption suite: six kinds at three severities."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Literal, Optional, Tuple, get_args

import numpy as np
from scipy.ndimage import uniform_filter

logger = logging.getLogger(__name__)

CorruptionKind = Literal["gaussian_noise", "shot_noise", "blur", "brightness", "contrast", "fog"]
CORRUPTION_KINDS: Tuple[str, ...] = get_args(CorruptionKind)
SEVERITIES = (1, 2, 3)
FOG_LEVEL = 0.8


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise ValueError(f"Unknown corruption kind: {self.kind}. Available: {list(CORRUPTION_KINDS)}")
        if self.severity not in SEVERITIES:
            raise ValueError(f"Corruption severity must be in {SEVERITIES}, got {self.severity}")

    def __str__(self) -> str:
        return f"{self.kind}@{self.severity}"


class BaseCorruption(ABC):
    """Severity-indexed image transform; ``levels[s - 1]`` is the magnitude at severity s."""

    levels: Tuple[float, ...] = ()
    needs_depth = False

    def level(self, severity: int) -> float:
        return self.levels[severity - 1]

    @abstractmethod
    def apply(self, image: np.ndarray, severity: int, rng: np.random.Generator, depth: Optional[np.ndarray]) -> np.ndarray:
        raise NotImplementedError


class GaussianNoise(BaseCorruption):
    levels = (0.04, 0.08, 0.12)

    def apply(self, image, severity, rng, depth):
        return image + rng.normal(0.0, self.level(severity), size=image.shape)


class ShotNoise(BaseCorruption):
    # photon count per unit intensity
    levels = (60.0, 25.0, 12.0)

    def apply(self, image, severity, rng, depth):
        rate = self.level(severity)
        return rng.poisson(np.clip(image, 0.0, 1.0) * rate) / rate


class BoxBlur(BaseCorruption):
    levels = (1, 2, 3)

    def apply(self, image, severity, rng, depth):
        radius = int(self.level(severity))
        size = [1] * (image.ndim - 2) + [2 * radius + 1, 2 * radius + 1]
        return uniform_filter(image, size=size, mode="nearest")


class Brightness(BaseCorruption):
    levels = (0.1, 0.2, 0.3)

    def apply(self, image, severity, rng, depth):
        return image + self.level(severity)


class Contrast(BaseCorruption):
    levels = (0.75, 0.5, 0.35)

    def apply(self, image, severity, rng, depth):
        mean = image.mean(axis=(-3, -2, -1), keepdims=True)
        return mean + (image - mean) * self.level(severity)


class Fog(BaseCorruption):
    """Depth-aware blend toward a constant haze: I t + L (1 - t), t = exp(-beta depth)."""

    levels = (0.02, 0.05, 0.1)
    needs_depth = True

    def apply(self, image, severity, rng, depth):
        transmittance = np.exp(-self.level(severity) * depth)
        return image * transmittance + FOG_LEVEL * (1.0 - transmittance)


_CORRUPTIONS: Dict[str, BaseCorruption] = {
    "gaussian_noise": GaussianNoise(),
    "shot_noise": ShotNoise(),
    "blur": BoxBlur(),
    "brightness": Brightness(),
    "contrast": Contrast(),
    "fog": Fog(),
}


def create_corruption(kind: str) -> BaseCorruption:
    if kind not in _CORRUPTIONS:
        raise ValueError(f"Unknown corruption kind: {kind}. Available: {list(_CORRUPTIONS)}")
    return _CORRUPTIONS[kind]


def corrupt(image: np.ndarray, spec: CorruptionSpec, seed: int, depth: Optional[np.ndarray] = None) -> np.ndarray:
    """Corrupted copy of ``image`` ([..., 3, H, W] in [0,1]), clamped to [0,1].

    Args:
        image: Clean image or batch of images.
        spec: Corruption kind and severity.
        seed: Seeds the noise kinds; the result is a pure function of (image, spec, seed).
        depth: Ground-truth depth broadcastable to ``image`` over the channel axis;
            required by fog.
    """
    corruption = create_corruption(spec.kind)
    if corruption.needs_depth:
        if depth is None:
            raise ValueError(f"Corruption {spec.kind} needs a ground-truth depth map")
        depth = np.asarray(depth, dtype=np.float64)
        if depth.ndim == image.ndim - 1:
            depth = np.expand_dims(depth, axis=-3)
    rng = np.random.default_rng(seed)
    out = corruption.apply(np.asarray(image, dtype=np.float64), spec.severity, rng, depth)
    return np.clip(out, 0.0, 1.0)


def corruption_grid(kinds=CORRUPTION_KINDS, severities=SEVERITIES):
    """Every (kind, severity) spec in table order."""
    return [CorruptionSpec(kind, severity) for kind in kinds for severity in severities]
