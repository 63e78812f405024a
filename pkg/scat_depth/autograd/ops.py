"""Differentiable operations.

Binary operations broadcast only across axes that match exactly or have size
1 on one side, and both operands must have the same rank. Python scalars are
lifted to a constant tensor of shape ``(1,) * ndim``.
"""

import logging
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from scat_depth.autograd.tensor import Function, Tensor, get_default_dtype

logger = logging.getLogger(__name__)

Operand = Union[Tensor, float, int, np.ndarray]
Axis = Optional[Union[int, Tuple[int, ...]]]

_SERIES_THRESHOLD = 1e-3


def _lift(value: Operand, ndim: int) -> Tensor:
    if isinstance(value, Tensor):
        return value
    if isinstance(value, np.ndarray) and value.ndim > 0:
        return Tensor(value)
    return Tensor(np.full((1,) * ndim, float(value)))


def _coerce(a: Operand, b: Operand) -> Tuple[Tensor, Tensor]:
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        raise TypeError("At least one operand must be a Tensor")
    ndim = a.ndim if isinstance(a, Tensor) else b.ndim
    a_t, b_t = _lift(a, ndim), _lift(b, ndim)
    broadcast_shape(a_t.shape, b_t.shape)
    return a_t, b_t


def broadcast_shape(a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, ...]:
    if len(a) != len(b):
        raise ValueError(f"Cannot broadcast shapes {a} and {b}: rank {len(a)} != {len(b)}")
    out = []
    for axis, (x, y) in enumerate(zip(a, b)):
        if x == y or y == 1:
            out.append(x)
        elif x == 1:
            out.append(y)
        else:
            raise ValueError(f"Cannot broadcast shapes {a} and {b}: axis {axis} has {x} vs {y}")
    return tuple(out)


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _normalize_axes(axis: Axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


# ---------------------------------------------------------------- arithmetic


class Add(Function):
    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad):
        return (
            unbroadcast(grad, self.shapes[0]) if self.needs_grad[0] else None,
            unbroadcast(grad, self.shapes[1]) if self.needs_grad[1] else None,
        )


class Sub(Function):
    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad):
        return (
            unbroadcast(grad, self.shapes[0]) if self.needs_grad[0] else None,
            unbroadcast(-grad, self.shapes[1]) if self.needs_grad[1] else None,
        )


class Mul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return (
            unbroadcast(grad * self.b, self.a.shape) if self.needs_grad[0] else None,
            unbroadcast(grad * self.a, self.b.shape) if self.needs_grad[1] else None,
        )


class Div(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a / b

    def backward(self, grad):
        grad_a = grad_b = None
        if self.needs_grad[0]:
            grad_a = unbroadcast(grad / self.b, self.a.shape)
        if self.needs_grad[1]:
            grad_b = unbroadcast(-grad * self.a / (self.b * self.b), self.b.shape)
        return grad_a, grad_b


class ScalarMul(Function):
    def forward(self, x, scalar: float = 1.0):
        self.scalar = scalar
        return x * scalar

    def backward(self, grad):
        return (grad * self.scalar,)


class Minimum(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return np.minimum(a, b)

    def backward(self, grad):
        take_a = self.a <= self.b
        return (
            unbroadcast(np.where(take_a, grad, 0.0), self.a.shape) if self.needs_grad[0] else None,
            unbroadcast(np.where(take_a, 0.0, grad), self.b.shape) if self.needs_grad[1] else None,
        )


class MatMul(Function):
    """Batched matrix product over the last two axes."""

    def forward(self, a, b):
        if a.ndim != b.ndim or a.ndim < 2:
            raise ValueError(f"matmul needs operands of equal rank >= 2, got {a.shape} and {b.shape}")
        if a.shape[-1] != b.shape[-2]:
            raise ValueError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
        broadcast_shape(a.shape[:-2] + (1, 1), b.shape[:-2] + (1, 1))
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad):
        grad_a = grad_b = None
        if self.needs_grad[0]:
            grad_a = unbroadcast(np.matmul(grad, np.swapaxes(self.b, -1, -2)), self.a.shape)
        if self.needs_grad[1]:
            grad_b = unbroadcast(np.matmul(np.swapaxes(self.a, -1, -2), grad), self.b.shape)
        return grad_a, grad_b


# ---------------------------------------------------------------- elementwise


class Elu(Function):
    def forward(self, x, alpha: float = 1.0):
        self.x, self.alpha = x, alpha
        return np.where(x > 0, x, alpha * np.expm1(np.minimum(x, 0.0)))

    def backward(self, grad):
        return (np.where(self.x > 0, grad, grad * self.alpha * np.exp(np.minimum(self.x, 0.0))),)


class Sigmoid(Function):
    def forward(self, x):
        self.out = expit(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Abs(Function):
    def forward(self, x):
        self.x = x
        return np.abs(x)

    def backward(self, grad):
        return (grad * np.sign(self.x),)


class Clamp(Function):
    def forward(self, x, low: Optional[float] = None, high: Optional[float] = None):
        self.x, self.low, self.high = x, low, high
        return np.clip(x, low, high)

    def backward(self, grad):
        inside = np.ones(self.x.shape, dtype=bool)
        if self.low is not None:
            inside &= self.x > self.low
        if self.high is not None:
            inside &= self.x < self.high
        return (np.where(inside, grad, 0.0),)


class Exp(Function):
    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    def forward(self, x):
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


# ---------------------------------------------------------------- reductions / shape


class Sum(Function):
    def forward(self, x, axis: Axis = None, keepdims: bool = False):
        self.shape = x.shape
        self.axes = _normalize_axes(axis, x.ndim)
        self.keepdims = keepdims
        return np.asarray(x.sum(axis=self.axes, keepdims=keepdims))

    def backward(self, grad):
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axes)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Reshape(Function):
    def forward(self, x, shape: Tuple[int, ...] = ()):
        self.shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class Transpose(Function):
    def forward(self, x, axes: Optional[Tuple[int, ...]] = None):
        self.axes = tuple(axes) if axes else tuple(reversed(range(x.ndim)))
        return np.transpose(x, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)


class GetItem(Function):
    def forward(self, x, index: Any = None):
        self.shape, self.index = x.shape, index
        return np.array(x[index])

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=grad.dtype)
        np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    def forward(self, *arrays, axis: int = 1):
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        pieces = np.split(grad, self.splits, axis=self.axis)
        return tuple(p if needed else None for p, needed in zip(pieces, self.needs_grad))


class UpsampleNearest2x(Function):
    def forward(self, x):
        self.shape = x.shape
        return x.repeat(2, axis=-2).repeat(2, axis=-1)

    def backward(self, grad):
        *lead, h, w = self.shape
        return (grad.reshape(*lead, h, 2, w, 2).sum(axis=(-3, -1)),)


class Pad2d(Function):
    """Pads the last two axes; the adjoint scatters through the same index maps."""

    _NUMPY_MODES = {"reflect": "reflect", "replicate": "edge"}

    def forward(self, x, pad: int = 1, mode: str = "reflect"):
        self.shape, self.pad, self.mode = x.shape, pad, mode
        if mode == "zero":
            widths = [(0, 0)] * (x.ndim - 2) + [(pad, pad), (pad, pad)]
            return np.pad(x, widths)
        if mode not in self._NUMPY_MODES:
            raise ValueError(f"Unknown padding mode: {mode}")
        h, w = x.shape[-2:]
        if mode == "reflect" and (pad >= h or pad >= w):
            raise ValueError(f"Reflect padding {pad} needs spatial size > {pad}, got {h}x{w}")
        self.rows = np.pad(np.arange(h), pad, mode=self._NUMPY_MODES[mode])
        self.cols = np.pad(np.arange(w), pad, mode=self._NUMPY_MODES[mode])
        return x[..., self.rows[:, None], self.cols[None, :]]

    def backward(self, grad):
        p = self.pad
        if self.mode == "zero":
            return (grad[..., p:grad.shape[-2] - p, p:grad.shape[-1] - p].copy(),)
        h, w = self.shape[-2:]
        # row adjoint then column adjoint, each a fixed-order scatter
        rows = np.zeros(grad.shape[:-2] + (h, grad.shape[-1]), dtype=grad.dtype)
        for src, dst in enumerate(self.rows):
            rows[..., dst, :] += grad[..., src, :]
        out = np.zeros(self.shape, dtype=grad.dtype)
        for src, dst in enumerate(self.cols):
            out[..., dst] += rows[..., src]
        return (out,)


class AvgPool2d(Function):
    def forward(self, x, kernel: int = 2, stride: int = 2):
        h, w = x.shape[-2:]
        if (h - kernel) % stride or (w - kernel) % stride:
            raise ValueError(f"avg_pool2d(k={kernel}, s={stride}) does not tile a {h}x{w} input exactly")
        self.shape, self.kernel, self.stride = x.shape, kernel, stride
        windows = sliding_window_view(x, (kernel, kernel), axis=(-2, -1))[..., ::stride, ::stride, :, :]
        self.out_hw = windows.shape[-4:-2]
        return windows.mean(axis=(-2, -1))

    def backward(self, grad):
        k, s = self.kernel, self.stride
        ho, wo = self.out_hw
        out = np.zeros(self.shape, dtype=grad.dtype)
        share = grad / (k * k)
        for di in range(k):
            for dj in range(k):
                out[..., di:di + s * ho:s, dj:dj + s * wo:s] += share
        return (out,)


class Conv2d(Function):
    """Cross-correlation with zero padding: [N,C,H,W] * [F,C,kh,kw] -> [N,F,H',W']."""

    def forward(self, x, kernel, stride: int = 1, padding: int = 0):
        if x.ndim != 4 or kernel.ndim != 4:
            raise ValueError(f"conv2d needs 4-d input and kernel, got {x.shape} and {kernel.shape}")
        n, c, h, w = x.shape
        f, kc, kh, kw = kernel.shape
        if kc != c:
            raise ValueError(f"conv2d channel mismatch: input has {c}, kernel expects {kc}")
        if kh % 2 == 0 or kw % 2 == 0:
            raise ValueError(f"conv2d needs odd kernel sizes, got {kh}x{kw}")
        if padding < 0 or stride < 1:
            raise ValueError(f"conv2d needs padding >= 0 and stride >= 1, got {padding}, {stride}")
        if (h + 2 * padding - kh) % stride or (w + 2 * padding - kw) % stride:
            raise ValueError(
                f"conv2d output size is not exact: ({h}+2*{padding}-{kh})/{stride}, ({w}+2*{padding}-{kw})/{stride}"
            )

        self.x_shape, self.kernel, self.stride, self.padding = x.shape, kernel, stride, padding
        padded = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        self.windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
        out = np.tensordot(self.windows, kernel, axes=([1, 4, 5], [1, 2, 3]))
        return out.transpose(0, 3, 1, 2)

    def backward(self, grad):
        grad_x = grad_k = None
        if self.needs_grad[1]:
            grad_k = np.tensordot(grad, self.windows, axes=([0, 2, 3], [0, 2, 3]))
        if self.needs_grad[0]:
            n, c, h, w = self.x_shape
            _, _, kh, kw = self.kernel.shape
            s, p = self.stride, self.padding
            ho, wo = grad.shape[2:]
            padded = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=grad.dtype)
            for i in range(kh):
                for j in range(kw):
                    contrib = np.tensordot(grad, self.kernel[:, :, i, j], axes=([1], [0]))
                    padded[:, :, i:i + s * ho:s, j:j + s * wo:s] += contrib.transpose(0, 3, 1, 2)
            grad_x = padded[:, :, p:p + h, p:p + w].copy()
        return grad_x, grad_k


# ---------------------------------------------------------------- sampling


def snap_tolerance() -> float:
    """Pixel distance under which sample coordinates are snapped to integers."""
    return 1e-9 if get_default_dtype() == np.float64 else 1e-3


class GridSample(Function):
    """Bilinear sampling, align_corners convention, border clamping.

    ``grid[..., 0]`` is x (width) and ``grid[..., 1]`` is y (height), both in
    [-1, 1]. Coordinates within :func:`snap_tolerance` of an integer pixel are
    snapped so an identity grid reproduces the image exactly.
    """

    def forward(self, image, grid):
        if grid.ndim != 4 or grid.shape[-1] != 2:
            raise ValueError(f"grid must be [N,H,W,2], got {grid.shape}")
        if image.ndim != 4 or image.shape[0] != grid.shape[0]:
            raise ValueError(f"grid_sample batch mismatch: image {image.shape}, grid {grid.shape}")
        n, c, h, w = image.shape
        if h < 2 or w < 2:
            raise ValueError(f"grid_sample needs an image of at least 2x2, got {h}x{w}")

        tol = snap_tolerance()
        g = grid.astype(np.float64)
        x = (g[..., 0] + 1.0) * 0.5 * (w - 1)
        y = (g[..., 1] + 1.0) * 0.5 * (h - 1)
        x = np.where(np.abs(x - np.rint(x)) < tol, np.rint(x), x)
        y = np.where(np.abs(y - np.rint(y)) < tol, np.rint(y), y)
        self.inside_x = (x >= 0) & (x <= w - 1)
        self.inside_y = (y >= 0) & (y <= h - 1)

        x = np.clip(x, 0, w - 1)
        y = np.clip(y, 0, h - 1)
        x0 = np.minimum(np.floor(x), w - 2).astype(np.int64)
        y0 = np.minimum(np.floor(y), h - 2).astype(np.int64)
        wx = (x - x0)[..., None]
        wy = (y - y0)[..., None]

        batch = np.arange(n)[:, None, None]
        nhwc = np.transpose(image, (0, 2, 3, 1)).astype(np.float64)
        i00 = nhwc[batch, y0, x0]
        i01 = nhwc[batch, y0, x0 + 1]
        i10 = nhwc[batch, y0 + 1, x0]
        i11 = nhwc[batch, y0 + 1, x0 + 1]

        self.image_shape = image.shape
        self.index = (batch, y0, x0)
        self.weights = ((1 - wy) * (1 - wx), (1 - wy) * wx, wy * (1 - wx), wy * wx)
        self.corners = (i00, i01, i10, i11)
        self.wx, self.wy = wx, wy

        out = self.weights[0] * i00 + self.weights[1] * i01 + self.weights[2] * i10 + self.weights[3] * i11
        return np.transpose(out, (0, 3, 1, 2))

    def backward(self, grad):
        n, c, h, w = self.image_shape
        g = np.transpose(grad, (0, 2, 3, 1)).astype(np.float64)
        grad_image = grad_grid = None

        if self.needs_grad[0]:
            batch, y0, x0 = self.index
            acc = np.zeros((n, h, w, c), dtype=np.float64)
            w00, w01, w10, w11 = self.weights
            np.add.at(acc, (batch, y0, x0), w00 * g)
            np.add.at(acc, (batch, y0, x0 + 1), w01 * g)
            np.add.at(acc, (batch, y0 + 1, x0), w10 * g)
            np.add.at(acc, (batch, y0 + 1, x0 + 1), w11 * g)
            grad_image = np.transpose(acc, (0, 3, 1, 2))

        if self.needs_grad[1]:
            i00, i01, i10, i11 = self.corners
            d_dx = (1 - self.wy) * (i01 - i00) + self.wy * (i11 - i10)
            d_dy = (1 - self.wx) * (i10 - i00) + self.wx * (i11 - i01)
            gx = (g * d_dx).sum(axis=-1) * 0.5 * (w - 1) * self.inside_x
            gy = (g * d_dy).sum(axis=-1) * 0.5 * (h - 1) * self.inside_y
            grad_grid = np.stack([gx, gy], axis=-1)

        return grad_image, grad_grid


# ---------------------------------------------------------------- rotation helpers


class SinOverTheta(Function):
    """sin(t)/t as a function of s = t**2, with a series branch near zero."""

    def forward(self, theta_sq):
        s = theta_sq.astype(np.float64)
        small = s < _SERIES_THRESHOLD
        t = np.sqrt(np.where(small, 1.0, s))
        closed = np.sin(t) / t
        series = 1 - s / 6 + s ** 2 / 120 - s ** 3 / 5040
        self.s, self.small, self.t = s, small, t
        self.out = np.where(small, series, closed)
        return self.out

    def backward(self, grad):
        s_safe = np.where(self.small, 1.0, self.s)
        closed = (np.cos(self.t) - self.out) / (2 * s_safe)
        series = -1 / 6 + self.s / 60 - self.s ** 2 / 1680
        return (grad * np.where(self.small, series, closed),)


class OneMinusCosOverThetaSq(Function):
    """(1 - cos t)/t**2 as a function of s = t**2, with a series branch near zero."""

    def forward(self, theta_sq):
        s = theta_sq.astype(np.float64)
        small = s < _SERIES_THRESHOLD
        s_safe = np.where(small, 1.0, s)
        t = np.sqrt(s_safe)
        closed = (1 - np.cos(t)) / s_safe
        series = 0.5 - s / 24 + s ** 2 / 720 - s ** 3 / 40320
        self.s, self.small, self.s_safe = s, small, s_safe
        self.sin_over = np.sin(t) / t
        self.out = np.where(small, series, closed)
        return self.out

    def backward(self, grad):
        closed = (self.sin_over / 2 - self.out) / self.s_safe
        series = -1 / 24 + self.s / 360 - self.s ** 2 / 13440
        return (grad * np.where(self.small, series, closed),)


class Skew(Function):
    """[N,3] vectors to [N,3,3] cross-product matrices."""

    def forward(self, r):
        x, y, z = r[:, 0], r[:, 1], r[:, 2]
        zero = np.zeros_like(x)
        return np.stack(
            [
                np.stack([zero, -z, y], axis=-1),
                np.stack([z, zero, -x], axis=-1),
                np.stack([-y, x, zero], axis=-1),
            ],
            axis=1,
        )

    def backward(self, grad):
        return (
            np.stack(
                [
                    grad[:, 2, 1] - grad[:, 1, 2],
                    grad[:, 0, 2] - grad[:, 2, 0],
                    grad[:, 1, 0] - grad[:, 0, 1],
                ],
                axis=-1,
            ),
        )


class SphereProject(Function):
    """Rescales every sample (axis 0) to L2 norm ``radius``.

    A sample whose raw values are all zero has no direction; it is replaced by
    seeded Gaussian noise and receives no gradient.
    """

    def forward(self, raw, radius: float = 1.0, fallback_seed: int = 0):
        flat = raw.reshape(raw.shape[0], -1).astype(np.float64)
        norms = np.linalg.norm(flat, axis=1)
        self.replaced = norms == 0.0
        if self.replaced.any():
            rng = np.random.default_rng(fallback_seed)
            for i in np.flatnonzero(self.replaced):
                flat[i] = rng.standard_normal(flat.shape[1])
            logger.warning(
                f"Perturbation sphere projection: {int(self.replaced.sum())} all-zero sample(s) "
                f"replaced by Gaussian noise (seed {fallback_seed})"
            )
            norms = np.linalg.norm(flat, axis=1)
        self.shape, self.radius = raw.shape, float(radius)
        self.norms = norms[:, None]
        self.unit = flat / self.norms
        return (self.radius * self.unit).reshape(raw.shape)

    def backward(self, grad):
        g = grad.reshape(self.shape[0], -1).astype(np.float64)
        radial = (self.unit * g).sum(axis=1, keepdims=True)
        out = (self.radius / self.norms) * (g - self.unit * radial)
        out[self.replaced] = 0.0
        return (out.reshape(self.shape),)


# ---------------------------------------------------------------- public API


def add(a: Operand, b: Operand) -> Tensor:
    return Add.apply(*_coerce(a, b))


def sub(a: Operand, b: Operand) -> Tensor:
    return Sub.apply(*_coerce(a, b))


def mul(a: Operand, b: Operand) -> Tensor:
    return Mul.apply(*_coerce(a, b))


def div(a: Operand, b: Operand) -> Tensor:
    return Div.apply(*_coerce(a, b))


def scalar_mul(x: Tensor, scalar: float) -> Tensor:
    return ScalarMul.apply(x, scalar=float(scalar))


def minimum(a: Operand, b: Operand) -> Tensor:
    return Minimum.apply(*_coerce(a, b))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul.apply(a, b)


def elu(x: Tensor, alpha: float = 1.0) -> Tensor:
    return Elu.apply(x, alpha=alpha)


def sigmoid(x: Tensor) -> Tensor:
    return Sigmoid.apply(x)


def tanh(x: Tensor) -> Tensor:
    return scalar_mul(sigmoid(scalar_mul(x, 2.0)), 2.0) - 1.0


def abs(x: Tensor) -> Tensor:  # noqa: A001
    return Abs.apply(x)


def clamp(x: Tensor, low: Optional[float] = None, high: Optional[float] = None) -> Tensor:
    return Clamp.apply(x, low=low, high=high)


def exp(x: Tensor) -> Tensor:
    return Exp.apply(x)


def log(x: Tensor) -> Tensor:
    return Log.apply(x)


def sum(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return Sum.apply(x, axis=axis, keepdims=keepdims)


def mean(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    count = int(np.prod([x.shape[a] for a in _normalize_axes(axis, x.ndim)]))
    return scalar_mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(x, shape=tuple(shape))


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    return Transpose.apply(x, axes=tuple(axes) if axes else None)


def getitem(x: Tensor, index: Any) -> Tensor:
    return GetItem.apply(x, index=index)


def concat(tensors: List[Tensor], axis: int = 1) -> Tensor:
    ranks = {t.ndim for t in tensors}
    if len(ranks) != 1:
        raise ValueError(f"concat needs tensors of equal rank, got shapes {[t.shape for t in tensors]}")
    for t in tensors[1:]:
        other = [d for i, d in enumerate(t.shape) if i != axis % t.ndim]
        first = [d for i, d in enumerate(tensors[0].shape) if i != axis % t.ndim]
        if other != first:
            raise ValueError(f"concat shape mismatch off axis {axis}: {tensors[0].shape} vs {t.shape}")
    return Concat.apply(*tensors, axis=axis)


def concat_channels(tensors: List[Tensor]) -> Tensor:
    return concat(tensors, axis=1)


def upsample_nearest_x2(x: Tensor) -> Tensor:
    return UpsampleNearest2x.apply(x)


def pad2d(x: Tensor, pad: int, mode: str = "reflect") -> Tensor:
    return Pad2d.apply(x, pad=pad, mode=mode)


def avg_pool2d(x: Tensor, kernel: int = 2, stride: int = 2) -> Tensor:
    return AvgPool2d.apply(x, kernel=kernel, stride=stride)


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    return Conv2d.apply(x, kernel, stride=stride, padding=padding)


def grid_sample(image: Tensor, grid: Tensor) -> Tensor:
    return GridSample.apply(image, grid)


def sin_over_theta(theta_sq: Tensor) -> Tensor:
    return SinOverTheta.apply(theta_sq)


def one_minus_cos_over_theta_sq(theta_sq: Tensor) -> Tensor:
    return OneMinusCosOverThetaSq.apply(theta_sq)


def skew(r: Tensor) -> Tensor:
    if r.ndim != 2 or r.shape[1] != 3:
        raise ValueError(f"skew needs [N,3] vectors, got {r.shape}")
    return Skew.apply(r)


def sphere_project(raw: Tensor, radius: float, fallback_seed: int = 0) -> Tensor:
    if radius < 0:
        raise ValueError(f"Sphere radius must be >= 0, got {radius}")
    if radius == 0:
        return scalar_mul(raw, 0.0)
    return SphereProject.apply(raw, radius=radius, fallback_seed=fallback_seed)
