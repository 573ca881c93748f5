#!/usr/bin/env python3

import math
import warnings

import torch

from ..utils.errors import NonFiniteError
from ..utils.memoize import cached


class SaturationWarning(UserWarning):
    pass


class Fp8Format(object):
    r"""
    An 8-bit floating point storage format: 1 sign bit, `exponent_bits` exponent bits and
    `mantissa_bits` mantissa bits, with subnormals.

    Two families are supported:

    * IEEE-like (`has_infinities=True`, E5M2): the all-ones exponent encodes infinities
      (mantissa 0) and NaNs (mantissa != 0). Max finite value: 57344.
    * Finite-only (`has_infinities=False`, E4M3): the all-ones exponent holds normal values,
      except the all-ones mantissa which is NaN. Max finite value: 448.

    Encoding always saturates: magnitudes beyond :attr:`max_finite` become :math:`\pm` :attr:`max_finite`.
    Infinity codes of E5M2 can be decoded but are never produced.

    Args:
        :attr:`name` (str): "e5m2" or "e4m3" for the built-in formats
        :attr:`exponent_bits` (int)
        :attr:`mantissa_bits` (int)
        :attr:`has_infinities` (bool)
    """

    def __init__(self, name, exponent_bits, mantissa_bits, has_infinities):
        if exponent_bits + mantissa_bits + 1 != 8:
            raise ValueError(f"An 8-bit format needs 7 exponent + mantissa bits, got {exponent_bits} + {mantissa_bits}")
        self.name = name
        self.exponent_bits = exponent_bits
        self.mantissa_bits = mantissa_bits
        self.has_infinities = has_infinities

    @property
    def bias(self):
        return 2 ** (self.exponent_bits - 1) - 1

    @property
    def max_finite(self):
        return float(self.positive_grid()[-1])

    @property
    def min_subnormal(self):
        return 2.0 ** (1 - self.bias - self.mantissa_bits)

    @property
    def min_normal(self):
        return 2.0 ** (1 - self.bias)

    def _decode_code(self, code):
        sign = -1.0 if (code >> 7) & 1 else 1.0
        exponent = (code >> self.mantissa_bits) & ((1 << self.exponent_bits) - 1)
        mantissa = code & ((1 << self.mantissa_bits) - 1)
        max_exponent = (1 << self.exponent_bits) - 1

        if self.has_infinities and exponent == max_exponent:
            return sign * math.inf if mantissa == 0 else math.nan
        if not self.has_infinities and exponent == max_exponent and mantissa == (1 << self.mantissa_bits) - 1:
            return math.nan
        if exponent == 0:
            return sign * math.ldexp(mantissa, 1 - self.bias - self.mantissa_bits)
        return sign * math.ldexp((1 << self.mantissa_bits) + mantissa, exponent - self.bias - self.mantissa_bits)

    @cached(name="decode_table")
    def decode_table(self):
        """The value of every code 0..255 (NaN and infinities included) as a float32 tensor."""
        return torch.tensor([self._decode_code(code) for code in range(256)], dtype=torch.float32)

    @cached(name="finite_mask")
    def finite_mask(self):
        return self.decode_table().isfinite()

    @cached(name="positive_grid")
    def positive_grid(self):
        """
        Non-negative finite values, indexed by code. Codes 0..n-1 with the sign bit clear are exactly
        the non-negative finite values, in increasing order.
        """
        table = self.decode_table()[:128]
        n = int(table.isfinite().sum())
        return table[:n].clone()

    def __eq__(self, other):
        return isinstance(other, Fp8Format) and (
            (self.name, self.exponent_bits, self.mantissa_bits, self.has_infinities)
            == (other.name, other.exponent_bits, other.mantissa_bits, other.has_infinities)
        )

    def __hash__(self):
        return hash((self.name, self.exponent_bits, self.mantissa_bits, self.has_infinities))

    def __repr__(self):
        return f"Fp8Format({self.name!r}, exponent_bits={self.exponent_bits}, mantissa_bits={self.mantissa_bits})"

    @classmethod
    def from_name(cls, name):
        key = name.lower().replace("fp8_", "").replace("fp8", "").replace("_", "")
        if key == "e5m2":
            return E5M2
        if key == "e4m3":
            return E4M3
        raise ValueError(f"Unknown FP8 format {name!r}. Expected 'e5m2' or 'e4m3'")


E5M2 = Fp8Format("e5m2", exponent_bits=5, mantissa_bits=2, has_infinities=True)
E4M3 = Fp8Format("e4m3", exponent_bits=4, mantissa_bits=3, has_infinities=False)


def fp8_encode_tensor(x, fmt):
    """
    Round every element of `x` to the nearest finite value of `fmt` (ties to even mantissa)
    and return the codes as a uint8 tensor of the same shape. Signed zeros are preserved,
    magnitudes beyond the format range saturate (with a :class:`SaturationWarning`).
    Float64 input is rounded from its double value; anything else is read as float32.
    """
    x = torch.as_tensor(x)
    if x.dtype != torch.float64:
        x = x.to(torch.float32)
    if bool(x.isnan().any()):
        raise NonFiniteError("Cannot encode NaN to FP8")

    # the grid and its midpoints are exact in double
    grid = fmt.positive_grid().double()
    max_finite = float(grid[-1])
    magnitude = x.abs().double()
    if bool((magnitude > max_finite).any()):
        warnings.warn(
            f"{int((magnitude > max_finite).sum())} value(s) exceed the {fmt.name} range and were saturated "
            f"to +/-{max_finite}",
            SaturationWarning,
        )
        magnitude = magnitude.clamp(max=max_finite)

    # grid[lo] <= magnitude <= grid[hi], with hi == lo only at exact zero
    hi = torch.searchsorted(grid, magnitude.reshape(-1)).reshape(magnitude.shape)
    lo = (hi - 1).clamp(min=0)
    midpoint = (grid[lo] + grid[hi]) * 0.5
    take_hi = (magnitude > midpoint) | ((magnitude == midpoint) & (hi % 2 == 0))
    codes = torch.where(take_hi, hi, lo)
    codes = codes | (torch.signbit(x).long() << 7)
    return codes.to(torch.uint8)


def fp8_decode_tensor(codes, fmt):
    """The float32 value of every code in a uint8 (or integer) tensor."""
    codes = torch.as_tensor(codes)
    if codes.is_floating_point():
        raise TypeError("FP8 codes must be an integer tensor")
    if bool(((codes < 0) | (codes > 255)).any()):
        raise ValueError("FP8 codes must lie in [0, 255]")
    return fmt.decode_table()[codes.long()]


def fp8_encode(x, fmt):
    """Scalar version of :func:`fp8_encode_tensor`: returns the code as an int."""
    if math.isnan(x):
        raise NonFiniteError("Cannot encode NaN to FP8")
    return int(fp8_encode_tensor(torch.tensor([x], dtype=torch.float64), fmt)[0])


def fp8_decode(code, fmt):
    """The exact value of a single code (may be NaN or an infinity for non-finite codes)."""
    code = int(code)
    if not 0 <= code <= 255:
        raise ValueError(f"FP8 codes must lie in [0, 255], got {code}")
    return float(fmt.decode_table()[code])


def fp8_quantize_tensor(x, fmt):
    """Encode-then-decode: the FP8 storage rounding of `x`. Idempotent."""
    x = torch.as_tensor(x, dtype=torch.float32)
    return fp8_decode_tensor(fp8_encode_tensor(x, fmt), fmt).reshape(x.shape)


def fp8_all_values(fmt):
    """Returns the decode table (Tensor 256) and its finite mask (bool Tensor 256)."""
    return fmt.decode_table().clone(), fmt.finite_mask().clone()
