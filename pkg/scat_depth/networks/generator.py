"""Adversarial perturbation generator.

The generator conditions on the clean frame and on a seeded noise plane joined
at the bottleneck. Its raw output is projected per image onto the L2 sphere
of radius epsilon.
"""

import logging
import math
from typing import Sequence

import numpy as np

from scat_depth.autograd import ops
from scat_depth.autograd.tensor import Tensor
from scat_depth.networks.base import Module

logger = logging.getLogger(__name__)

REFERENCE_PIXELS = 640 * 192


def scaled_epsilon(epsilon_m: float, height: int, width: int) -> float:
    """Perturbation radius preserving the per-pixel density of epsilon_m at 640x192."""
    if epsilon_m < 0:
        raise ValueError(f"epsilon_m must be >= 0, got {epsilon_m}")
    return epsilon_m * math.sqrt(height * width / REFERENCE_PIXELS)


class PerturbationGenerator(Module):
    def __init__(self, epsilon: float, widths: Sequence[int] = (16, 32, 64), seed: int = 0):
        super().__init__(seed)
        if epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {epsilon}")
        self.epsilon = float(epsilon)
        self.widths = tuple(int(w) for w in widths)
        self.version_tag = 0

        in_channels = 3
        for i, width in enumerate(self.widths, start=1):
            self.add_conv(f"enc{i}", in_channels, width)
            in_channels = width
        self.add_conv("fuse", in_channels + 1, in_channels)
        outs = self.widths[:-1][::-1] + (3,)
        for i, width in enumerate(outs, start=1):
            self.add_conv(f"dec{i}", in_channels, width)
            in_channels = width

    def noise_plane(self, batch: int, height: int, width: int, z_seed: int) -> Tensor:
        rng = np.random.default_rng(z_seed)
        return Tensor(rng.standard_normal((batch, 1, height, width)))

    def raw(self, image: Tensor, z_seed: int) -> Tensor:
        factor = 2 ** len(self.widths)
        n, _, h, w = image.shape
        if h % factor or w % factor:
            raise ValueError(f"Generator input {h}x{w} is not divisible by {factor}")

        x = image
        for i in range(1, len(self.widths) + 1):
            x = ops.avg_pool2d(self.conv_elu(f"enc{i}", x), 2, 2)
        z = self.noise_plane(n, h // factor, w // factor, z_seed)
        x = self.conv_elu("fuse", ops.concat_channels([x, z]))

        last = len(self.widths)
        for i in range(1, last + 1):
            x = self.conv(f"dec{i}", ops.upsample_nearest_x2(x))
            if i < last:
                x = ops.elu(x)
        return x

    def forward(self, image: Tensor, z_seed: int = 0) -> Tensor:
        """Perturbation delta with per-image L2 norm exactly epsilon."""
        if self.epsilon == 0.0:
            return Tensor(np.zeros(image.shape))
        return ops.sphere_project(self.raw(image, z_seed), self.epsilon, fallback_seed=z_seed)


def snapshot(generator: PerturbationGenerator, epoch: int) -> PerturbationGenerator:
    """Frozen deep copy stamped with ``epoch``."""
    frozen = generator.clone()
    frozen.freeze()
    frozen.version_tag = int(epoch)
    return frozen
