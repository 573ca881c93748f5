#!/usr/bin/env python3

from ._activation import silu as _silu
from ._matmul import deterministic_matmul
from ._normalization import rms_norm as _rms_norm, softmax_rows as _softmax_rows
from ._rotary import rope_rotate as _rope_rotate


def matmul(a, b):
    """
    Computes the matrix product of `a` (m x k) and `b` (k x n) in float32.

    Products are accumulated left-to-right over `k`, so the result is bit-identical to a naive
    triple loop and reproducible across runs and machines
    (unless :class:`spikequant.settings.fast_matmul` is on).

    Args:
        :attr:`a` (Tensor m x k)
        :attr:`b` (Tensor k x n)

    Returns:
        :obj:`Tensor` (m x n)
    """
    return deterministic_matmul(a, b)


def rms_norm(x, gamma, eps=None):
    r"""
    Root mean square normalization over the last dimension:
    :math:`\text{out}_i = v_i / \sqrt{\text{mean}(v^2) + \epsilon} \cdot \gamma_i`.

    Args:
        :attr:`x` (Tensor ... x d)
        :attr:`gamma` (Tensor d): per-channel gain
        :attr:`eps` (float, optional): Default: :class:`spikequant.settings.rms_eps` (1e-5)

    Returns:
        :obj:`Tensor` (... x d)
    """
    return _rms_norm(x, gamma, eps=eps)


def softmax_rows(x, mask=None):
    """
    Row-wise softmax of a matrix, computed with max-subtraction so it cannot overflow.

    Args:
        :attr:`x` (Tensor m x n)
        :attr:`mask` (bool Tensor m x n, optional): entries that are False get probability 0.

    Returns:
        :obj:`Tensor` (m x n), every row summing to 1
    """
    return _softmax_rows(x, mask=mask)


def silu(x):
    """
    Elementwise :math:`x \\cdot \\sigma(x)`, the gate nonlinearity of the decoder MLP.
    """
    return _silu(x)


def rope_rotate(x, base=None):
    """
    Rotary positional embedding of queries or keys.
    Each pair :math:`(x_{2i}, x_{2i+1})` at position `pos` is rotated by the angle
    :math:`pos \\cdot base^{-2i / d}`. Position 0 is left unchanged.

    Args:
        :attr:`x` (Tensor seq x n_heads x head_dim): head_dim must be even
        :attr:`base` (float, optional): Default: :class:`spikequant.settings.rope_base` (10000)

    Returns:
        :obj:`Tensor` (seq x n_heads x head_dim)
    """
    return _rope_rotate(x, base=base)


__all__ = ["matmul", "rms_norm", "rope_rotate", "silu", "softmax_rows"]
