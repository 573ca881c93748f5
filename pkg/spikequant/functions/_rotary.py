#!/usr/bin/env python3

import torch

from .. import settings
from ..utils.errors import ShapeError, check_finite


def rotary_angles(seq_len, head_dim, base):
    """`angles[pos, i] = pos * base ** (-2i / head_dim)`, computed in double precision."""
    inv_freq = base ** (-torch.arange(0, head_dim, 2, dtype=torch.float64) / head_dim)
    positions = torch.arange(seq_len, dtype=torch.float64)
    return torch.outer(positions, inv_freq)


def rope_rotate(x, base=None):
    if base is None:
        base = settings.rope_base.value()
    if x.dim() != 3:
        raise ShapeError(f"rope_rotate expects a (seq x n_heads x head_dim) tensor, got {tuple(x.shape)}")
    head_dim = x.size(-1)
    if head_dim % 2:
        raise ShapeError(f"rope_rotate requires an even head dimension, got {head_dim}")
    if base <= 0:
        raise ValueError(f"rope base must be positive, got {base}")
    if settings.debug.on():
        check_finite(x, "rope_rotate input")

    angles = rotary_angles(x.size(0), head_dim, base)
    cos = angles.cos().to(x.dtype).unsqueeze(1)
    sin = angles.sin().to(x.dtype).unsqueeze(1)

    x_even = x[..., 0::2]
    x_odd = x[..., 1::2]
    res = torch.empty_like(x)
    res[..., 0::2] = x_even * cos - x_odd * sin
    res[..., 1::2] = x_even * sin + x_odd * cos
    return res
