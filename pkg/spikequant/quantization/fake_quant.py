#!/usr/bin/env python3

import torch

from .. import settings
from ..utils.errors import ConfigError, ShapeError, check_finite
from .quant_spec import QuantSpec


def compute_scale(x, bits):
    r"""
    The absolute-max scale :math:`\Delta = \max|x| / (2^{b-1} - 1)`, as a Python float.
    An all-zero (or empty) tensor gets :math:`\Delta = 1`.
    """
    qmax = QuantSpec(bits).qmax
    x = torch.as_tensor(x)
    if x.numel() == 0:
        return 1.0
    amax = float(x.abs().max())
    if amax == 0:
        return 1.0
    return amax / qmax


def _row_scales(rows, qmax):
    amax = rows.abs().amax(dim=-1).double()
    return torch.where(amax > 0, amax / qmax, torch.ones_like(amax))


def _round_to_grid(x, scale, qmax):
    # Division and rounding happen in double precision, so round-half-to-even acts on the exact quotient
    q = torch.round(x.double() / scale).clamp(-qmax, qmax)
    return (q * scale).to(torch.float32)


def fake_quantize(x, spec):
    """
    Quantize-then-dequantize `x` on the symmetric grid :math:`\\{k \\Delta : |k| \\le 2^{b-1} - 1\\}`
    (round half to even).

    Per-tensor granularity uses one :math:`\\Delta` for the whole tensor. Per-token granularity uses one
    :math:`\\Delta` per row of the (tokens x features) view, i.e. per slice along the last dimension.
    Static specs use their stored :math:`\\Delta` (one for every row); dynamic specs compute it from `x`.

    Args:
        :attr:`x` (Tensor)
        :attr:`spec` (:class:`QuantSpec`)

    Returns:
        :obj:`Tensor` of the same shape, float32
    """
    x = torch.as_tensor(x, dtype=torch.float32)
    if settings.debug.on():
        check_finite(x, "fake_quantize input")
    if spec.scale is not None and not spec.scale > 0:
        raise ConfigError(f"A static scale must be positive, got {spec.scale}")
    if x.numel() == 0:
        return x.clone()

    qmax = spec.qmax
    if spec.granularity == "per_tensor":
        scale = spec.scale if spec.is_static else compute_scale(x, spec.bits)
        return _round_to_grid(x, scale, qmax)

    if x.dim() < 2:
        raise ShapeError(f"Per-token quantization needs at least 2 dimensions, got shape {tuple(x.shape)}")
    rows = x.reshape(-1, x.size(-1))
    scale = spec.scale if spec.is_static else _row_scales(rows, qmax).unsqueeze(-1)
    return _round_to_grid(rows, scale, qmax).reshape(x.shape)


def fake_quantize_excluding_token(x, spec, excluded):
    """
    Fake-quantize a (seq x d) activation, leaving the row of token `excluded` untouched.
    The excluded row is also left out of the (dynamic) scale computation.
    """
    x = torch.as_tensor(x, dtype=torch.float32)
    if x.dim() != 2:
        raise ShapeError(f"Expected a (seq x d) activation, got shape {tuple(x.shape)}")
    seq_len = x.size(0)
    if isinstance(excluded, bool) or not isinstance(excluded, int) or not 0 <= excluded < seq_len:
        raise ConfigError(f"Excluded token {excluded!r} is out of range for a sequence of {seq_len} tokens")

    res = x.clone()
    keep = torch.ones(seq_len, dtype=torch.bool)
    keep[excluded] = False
    if bool(keep.any()):
        res[keep] = fake_quantize(x[keep], spec)
    elif settings.debug.on():
        check_finite(x, "fake_quantize input")
    return res


def quantize_weights(w, bits):
    """Per-tensor, dynamic fake quantization of a weight tensor."""
    return fake_quantize(w, QuantSpec(bits, "per_tensor"))
