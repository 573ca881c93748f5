#!/usr/bin/env python3

import torch

from .. import settings
from ..utils.errors import ShapeError, check_finite


def _ordered_matmul(a, b):
    """
    Row-major product accumulated strictly left-to-right over the inner dimension:
    `res[i, j] = (((a[i, 0] * b[0, j]) + a[i, 1] * b[1, j]) + ...)`, every step rounded to float32.
    The loop is over the inner dimension only; each step is vectorized across all (i, j).
    """
    res = torch.zeros(a.size(0), b.size(1), dtype=torch.float32)
    for k in range(a.size(1)):
        res.add_(torch.outer(a[:, k], b[k]))
    return res


def deterministic_matmul(a, b):
    if a.dim() != 2 or b.dim() != 2:
        raise ShapeError(f"matmul expects two matrices, got shapes {tuple(a.shape)} and {tuple(b.shape)}")
    if a.size(1) != b.size(0):
        raise ShapeError(f"Incompatible dimensions for matmul: {tuple(a.shape)} and {tuple(b.shape)}")
    if settings.debug.on():
        check_finite(a, "matmul lhs")
        check_finite(b, "matmul rhs")
    a = a.to(torch.float32)
    b = b.to(torch.float32)
    if settings.fast_matmul.on():
        res = torch.matmul(a, b)
    else:
        res = _ordered_matmul(a, b)
    if settings.debug.on():
        check_finite(res, "matmul result")
    return res
