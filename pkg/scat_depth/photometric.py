"""Photometric reconstruction losses.

The reconstruction target is always the unperturbed frame t. Every term is a
masked mean over all valid pixels of the batch.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from scat_depth.autograd import ops
from scat_depth.autograd.tensor import Tensor

logger = logging.getLogger(__name__)

SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
_INVALID_PENALTY = 1e4

Warp = Tuple[Tensor, Tensor]


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.85
    smoothness_weight: float = 1e-3

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.smoothness_weight < 0:
            raise ValueError(f"smoothness_weight must be >= 0, got {self.smoothness_weight}")


def _check_pair(a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ValueError(f"Image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 4:
        raise ValueError(f"Images must be [N,C,H,W], got {a.shape}")


def _local_mean(x: Tensor) -> Tensor:
    return ops.avg_pool2d(ops.pad2d(x, 1, mode="reflect"), kernel=3, stride=1)


def ssim(a: Tensor, b: Tensor) -> Tensor:
    """Per-pixel, per-channel SSIM over 3x3 windows with reflect padding."""
    _check_pair(a, b)
    mu_a = _local_mean(a)
    mu_b = _local_mean(b)
    mu_ab = mu_a * mu_b
    mu_a_sq = mu_a * mu_a
    mu_b_sq = mu_b * mu_b

    sigma_a = _local_mean(a * a) - mu_a_sq
    sigma_b = _local_mean(b * b) - mu_b_sq
    sigma_ab = _local_mean(a * b) - mu_ab

    numerator = (ops.scalar_mul(mu_ab, 2.0) + SSIM_C1) * (ops.scalar_mul(sigma_ab, 2.0) + SSIM_C2)
    denominator = (mu_a_sq + mu_b_sq + SSIM_C1) * (sigma_a + sigma_b + SSIM_C2)
    return numerator / denominator


def pe(a: Tensor, b: Tensor, weights: LossWeights = LossWeights()) -> Tensor:
    """Photometric error map [N,1,H,W]: alpha/2 (1 - SSIM) + (1 - alpha) L1, channel-averaged."""
    _check_pair(a, b)
    l1 = ops.abs(a - b)
    if weights.alpha == 0.0:
        return ops.mean(l1, axis=1, keepdims=True)
    structural = ops.scalar_mul(1.0 - ssim(a, b), weights.alpha / 2.0)
    return ops.mean(structural + ops.scalar_mul(l1, 1.0 - weights.alpha), axis=1, keepdims=True)


def masked_mean(error: Tensor, mask: Tensor) -> Tensor:
    """Mean of ``error`` over pixels where ``mask`` is 1; an empty mask yields 0 and a warning."""
    count = float(mask.numpy().sum())
    if count == 0.0:
        logger.warning("Photometric term has an empty valid mask; contributing 0")
        return ops.scalar_mul(ops.sum(error * mask), 0.0)
    return ops.scalar_mul(ops.sum(error * mask), 1.0 / count)


def _static_mask(target: Tensor, reprojected: np.ndarray, sources: Sequence[Tensor], weights: LossWeights) -> Tensor:
    identity = np.minimum.reduce([pe(target, s.detach(), weights).numpy() for s in sources])
    return Tensor((reprojected < identity).astype(np.float64))


def reprojection_term(
    target: Tensor,
    warped: Sequence[Warp],
    weights: LossWeights = LossWeights(),
    min_reprojection: bool = False,
    identity_sources: Optional[Sequence[Tensor]] = None,
) -> Tensor:
    """One branch of the reprojection loss.

    Args:
        target: Unperturbed frame t.
        warped: (synthesized image, valid mask) per source frame.
        weights: SSIM/L1 mix.
        min_reprojection: Per-pixel minimum over source frames instead of a sum.
        identity_sources: Unwarped source frames; when given, pixels whose
            reprojection error does not beat the identity error are masked out.

    Returns:
        Scalar loss.
    """
    if not warped:
        raise ValueError("reprojection_term needs at least one warped source frame")
    errors = [(pe(target, image, weights), mask) for image, mask in warped]

    static = None
    if identity_sources:
        best = np.minimum.reduce([e.numpy() + _INVALID_PENALTY * (1.0 - m.numpy()) for e, m in errors])
        static = _static_mask(target, best, identity_sources, weights)

    if min_reprojection:
        penalized = [e + ops.scalar_mul(1.0 - m, _INVALID_PENALTY) for e, m in errors]
        combined = penalized[0]
        for p in penalized[1:]:
            combined = ops.minimum(combined, p)
        union = Tensor(np.maximum.reduce([m.numpy() for _, m in errors]))
        if static is not None:
            union = union * static
        return masked_mean(combined, union)

    total: Optional[Tensor] = None
    for error, mask in errors:
        if static is not None:
            mask = mask * static
        term = masked_mean(error, mask)
        total = term if total is None else total + term
    return total


def reprojection_loss(
    target: Tensor,
    warped_clean: Sequence[Warp],
    warped_adv: Sequence[Warp],
    weights: LossWeights = LossWeights(),
    min_reprojection: bool = False,
    identity_sources: Optional[Sequence[Tensor]] = None,
) -> Tensor:
    """L_p: clean plus adversarial reprojection terms, both toward the unperturbed target."""
    clean = reprojection_term(target, warped_clean, weights, min_reprojection, identity_sources)
    if not warped_adv:
        return clean
    return clean + adversarial_loss(target, warped_adv, weights, min_reprojection, identity_sources)


def adversarial_loss(
    target: Tensor,
    warped_adv: Sequence[Warp],
    weights: LossWeights = LossWeights(),
    min_reprojection: bool = False,
    identity_sources: Optional[Sequence[Tensor]] = None,
) -> Tensor:
    """L_AD: the adversarial-branch reprojection terms only."""
    return reprojection_term(target, warped_adv, weights, min_reprojection, identity_sources)


def _gradient_x(x: Tensor) -> Tensor:
    return x[:, :, :, :-1] - x[:, :, :, 1:]


def _gradient_y(x: Tensor) -> Tensor:
    return x[:, :, :-1, :] - x[:, :, 1:, :]


def smoothness_loss(disp: Tensor, image: Tensor) -> Tensor:
    """Edge-aware first-order smoothness of mean-normalized disparity."""
    mean_disp = ops.mean(disp, axis=(2, 3), keepdims=True)
    norm = disp / (mean_disp + 1e-7)

    grad_disp_x = ops.abs(_gradient_x(norm))
    grad_disp_y = ops.abs(_gradient_y(norm))
    weight_x = ops.exp(-ops.mean(ops.abs(_gradient_x(image)), axis=1, keepdims=True))
    weight_y = ops.exp(-ops.mean(ops.abs(_gradient_y(image)), axis=1, keepdims=True))

    return ops.mean(grad_disp_x * weight_x) + ops.mean(grad_disp_y * weight_y)


def total_clean_objective(
    target: Tensor,
    warped: Sequence[Warp],
    disp: Tensor,
    weights: LossWeights,
    min_reprojection: bool = False,
    identity_sources: Optional[Sequence[Tensor]] = None,
) -> Tensor:
    """Clean reprojection term plus the weighted smoothness regularizer."""
    loss = reprojection_term(target, warped, weights, min_reprojection, identity_sources)
    if weights.smoothness_weight > 0:
        loss = loss + ops.scalar_mul(smoothness_loss(disp, target), weights.smoothness_weight)
    return loss
