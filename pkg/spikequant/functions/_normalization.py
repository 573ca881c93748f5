#!/usr/bin/env python3

import torch

from .. import settings
from ..utils.errors import NonFiniteError, ShapeError, check_finite


def rms_norm(x, gamma, eps=None):
    if eps is None:
        eps = settings.rms_eps.value()
    if x.size(-1) == 0:
        raise ShapeError("rms_norm is undefined over an empty last dimension")
    if gamma.dim() != 1 or gamma.size(0) != x.size(-1):
        raise ShapeError(f"gamma ({tuple(gamma.shape)}) does not match the last dimension of x ({tuple(x.shape)})")
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    if settings.debug.on():
        check_finite(x, "rms_norm input")
        check_finite(gamma, "rms_norm gamma")

    mean_square = x.pow(2).mean(dim=-1, keepdim=True)
    res = x / torch.sqrt(mean_square + eps) * gamma
    if not bool(res.isfinite().all()):
        raise NonFiniteError("rms_norm produced non-finite values (an all-zero vector with eps=0?)")
    return res


def softmax_rows(x, mask=None):
    if x.dim() != 2:
        raise ShapeError(f"softmax_rows expects a matrix, got shape {tuple(x.shape)}")
    if settings.debug.on():
        check_finite(x, "softmax_rows input")

    if mask is not None:
        if mask.shape != x.shape:
            raise ShapeError(f"mask ({tuple(mask.shape)}) does not match input ({tuple(x.shape)})")
        if not bool(mask.any(dim=-1).all()):
            raise ShapeError("every row of the softmax mask must keep at least one entry")
        x = x.masked_fill(~mask, float("-inf"))

    shifted = x - x.amax(dim=-1, keepdim=True)
    exp = shifted.exp()
    return exp / exp.sum(dim=-1, keepdim=True)
