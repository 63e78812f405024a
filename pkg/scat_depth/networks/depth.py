"""Scaling Depth Network: a UNet whose long skip connections are scaled by kappa."""

import logging
from typing import Sequence, Tuple, Union

from scat_depth.autograd import ops
from scat_depth.autograd.tensor import Tensor
from scat_depth.networks.base import Module

logger = logging.getLogger(__name__)

DEFAULT_WIDTHS = (16, 32, 64, 128)
DEFAULT_KAPPA = 0.7


def _expand_kappa(kappa: Union[float, Sequence[float]], levels: int) -> Tuple[float, ...]:
    values = (float(kappa),) * levels if isinstance(kappa, (int, float)) else tuple(float(k) for k in kappa)
    if len(values) != levels:
        raise ValueError(f"Expected {levels} skip scales, got {len(values)}")
    if any(k <= 0 for k in values):
        raise ValueError(f"Skip scales must all be > 0, got {values}")
    return values


class ScalingDepthNet(Module):
    """Encoder-decoder producing disparity in (0, 1).

    Encoder block i: conv+elu, 2x2 average pool, conv+elu; its output is skip i.
    Decoder step i (deepest first): h = kappa_i * skip_i + h, upsample, conv+elu.
    With every kappa equal to 1 this is the plain UNet.
    """

    def __init__(
        self,
        widths: Sequence[int] = DEFAULT_WIDTHS,
        kappa: Union[float, Sequence[float]] = DEFAULT_KAPPA,
        seed: int = 0,
    ):
        super().__init__(seed)
        self.widths = tuple(int(w) for w in widths)
        self.levels = len(self.widths)
        self.kappa = _expand_kappa(kappa, self.levels)

        in_channels = 3
        for i, width in enumerate(self.widths, start=1):
            self.add_conv(f"enc{i}.a", in_channels, width)
            self.add_conv(f"enc{i}.b", width, width)
            in_channels = width
        self.add_conv("bottleneck", self.widths[-1], self.widths[-1])

        out_widths = (max(self.widths[0] // 2, 1),) + self.widths[:-1]
        for i in range(self.levels, 0, -1):
            self.add_conv(f"dec{i}", self.widths[i - 1], out_widths[i - 1])
        self.add_conv("head", out_widths[0], 1)

    def set_kappa(self, kappa: Union[float, Sequence[float]]) -> None:
        self.kappa = _expand_kappa(kappa, self.levels)

    def _check_input(self, image: Tensor) -> None:
        if image.ndim != 4 or image.shape[1] != 3:
            raise ValueError(f"Depth network needs [N,3,H,W] input, got {image.shape}")
        factor = 2 ** self.levels
        h, w = image.shape[2:]
        if h % factor or w % factor:
            raise ValueError(f"Input {h}x{w} is not divisible by 2^{self.levels} = {factor}")

    def encode(self, image: Tensor) -> Tuple[list, Tensor]:
        skips = []
        h = image
        for i in range(1, self.levels + 1):
            h = self.conv_elu(f"enc{i}.a", h)
            h = ops.avg_pool2d(h, 2, 2)
            h = self.conv_elu(f"enc{i}.b", h)
            skips.append(h)
        return skips, self.conv_elu("bottleneck", h)

    def forward(self, image: Tensor) -> Tensor:
        self._check_input(image)
        skips, h = self.encode(image)
        for i in range(self.levels, 0, -1):
            h = ops.scalar_mul(skips[i - 1], self.kappa[i - 1]) + h
            h = self.conv_elu(f"dec{i}", ops.upsample_nearest_x2(h))
        return ops.sigmoid(self.conv("head", h))

    def standard_unet_forward(self, image: Tensor) -> Tensor:
        """Same weights with unscaled skips."""
        self._check_input(image)
        skips, h = self.encode(image)
        for i in range(self.levels, 0, -1):
            h = skips[i - 1] + h
            h = self.conv_elu(f"dec{i}", ops.upsample_nearest_x2(h))
        return ops.sigmoid(self.conv("head", h))
