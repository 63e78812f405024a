import logging
from typing import Sequence

from scat_depth.autograd import ops
from scat_depth.autograd.tensor import Tensor
from scat_depth.geometry import PoseSE3
from scat_depth.networks.base import Module

logger = logging.getLogger(__name__)

POSE_SCALE = 0.01
# raw head outputs pass through SATURATION * tanh(raw / SATURATION) before scaling
SATURATION = 100.0


class PoseNet(Module):
    """Relative pose of a source frame from the channel-concatenated (target, source) pair."""

    def __init__(self, widths: Sequence[int] = (16, 32, 64, 128), seed: int = 0):
        super().__init__(seed)
        self.widths = tuple(int(w) for w in widths)
        in_channels = 6
        for i, width in enumerate(self.widths, start=1):
            self.add_conv(f"block{i}", in_channels, width)
            in_channels = width
        self.add_conv("head", in_channels, 6, kernel=1)

    def raw(self, target: Tensor, source: Tensor) -> Tensor:
        if target.shape != source.shape:
            raise ValueError(f"Pose pair shapes differ: {target.shape} vs {source.shape}")
        factor = 2 ** len(self.widths)
        h, w = target.shape[2:]
        if h % factor or w % factor:
            raise ValueError(f"Pose input {h}x{w} is not divisible by {factor}")

        x = ops.concat_channels([target, source])
        for i in range(1, len(self.widths) + 1):
            x = ops.avg_pool2d(self.conv_elu(f"block{i}", x), 2, 2)
        return ops.mean(self.conv("head", x), axis=(2, 3))

    def forward(self, target: Tensor, source: Tensor) -> PoseSE3:
        raw = self.raw(target, source)
        bounded = ops.scalar_mul(ops.tanh(ops.scalar_mul(raw, 1.0 / SATURATION)), SATURATION * POSE_SCALE)
        return PoseSE3.from_vector(bounded)
