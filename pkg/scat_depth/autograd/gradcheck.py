"""Finite-difference oracle for the tape."""

import logging
from typing import Callable, Iterable, Optional, Union

import numpy as np

from scat_depth.autograd.tensor import Tape, Tensor, precision

logger = logging.getLogger(__name__)


def finite_difference_check(
    f: Callable[[Tensor], Tensor],
    x: Union[Tensor, np.ndarray],
    step: float = 1e-5,
    mask: Optional[np.ndarray] = None,
) -> float:
    """Compare tape gradients of a scalar function with central differences.

    Runs in 64-bit precision. Coordinates where ``mask`` is False are skipped.

    Args:
        f: Scalar-valued tensor function.
        x: Point at which to differentiate.
        step: Central-difference half width.
        mask: Optional boolean array of x's shape selecting compared coordinates.

    Returns:
        Maximum relative error |a - n| / max(|a|, |n|, 1e-3) over compared coordinates.
    """
    if step <= 0:
        raise ValueError(f"Finite-difference step must be > 0, got {step}")

    base = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    if mask is not None and mask.shape != base.shape:
        raise ValueError(f"Mask shape {mask.shape} does not match input shape {base.shape}")

    with precision(np.float64):
        leaf = Tensor(base, requires_grad=True)
        with Tape() as tape:
            out = f(leaf)
        tape.backward(out)
        grad = tape.gradient(leaf)
        analytic = np.zeros_like(base) if grad is None else np.asarray(grad, dtype=np.float64)

        flat = base.reshape(-1)
        selected = np.ones(flat.size, dtype=bool) if mask is None else mask.reshape(-1).astype(bool)
        worst = 0.0
        for i in np.flatnonzero(selected):
            plus = flat.copy()
            plus[i] += step
            minus = flat.copy()
            minus[i] -= step
            f_plus = f(Tensor(plus.reshape(base.shape))).item()
            f_minus = f(Tensor(minus.reshape(base.shape))).item()
            numeric = (f_plus - f_minus) / (2 * step)
            a = analytic.reshape(-1)[i]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-3)
            worst = max(worst, rel)

    logger.debug(f"Finite-difference check over {int(selected.sum())} coordinates: max rel err {worst:.3e}")
    return worst


def kink_mask(values: np.ndarray, kinks: Iterable[float], step: float) -> np.ndarray:
    """True where ``values`` stay farther than 2*step from every kink location."""
    keep = np.ones(values.shape, dtype=bool)
    for k in kinks:
        keep &= np.abs(values - k) > 2 * step
    return keep


def integer_kink_mask(values: np.ndarray, step: float) -> np.ndarray:
    """True where ``values`` stay farther than 2*step from every integer."""
    return np.abs(values - np.rint(values)) > 2 * step
