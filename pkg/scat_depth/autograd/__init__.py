from scat_depth.autograd.tensor import (
    Function,
    Tape,
    Tensor,
    current_tape,
    get_default_dtype,
    precision,
    set_default_dtype,
)
from scat_depth.autograd.gradcheck import finite_difference_check, integer_kink_mask, kink_mask

__all__ = [
    "Function",
    "Tape",
    "Tensor",
    "current_tape",
    "get_default_dtype",
    "precision",
    "set_default_dtype",
    "finite_difference_check",
    "integer_kink_mask",
    "kink_mask",
]
