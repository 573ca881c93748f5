#!/usr/bin/env python3

from .fp8 import (
    E4M3,
    E5M2,
    Fp8Format,
    SaturationWarning,
    fp8_all_values,
    fp8_decode,
    fp8_decode_tensor,
    fp8_encode,
    fp8_encode_tensor,
    fp8_quantize_tensor,
)
from .fp16 import FP16_MAX, fp16_round_tensor

__all__ = [
    "E4M3",
    "E5M2",
    "FP16_MAX",
    "Fp8Format",
    "SaturationWarning",
    "fp16_round_tensor",
    "fp8_all_values",
    "fp8_decode",
    "fp8_decode_tensor",
    "fp8_encode",
    "fp8_encode_tensor",
    "fp8_quantize_tensor",
]
