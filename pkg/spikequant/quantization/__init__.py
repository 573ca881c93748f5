#!/usr/bin/env python3

from .calibration import calibrate_static_scales, rescale
from .fake_quant import compute_scale, fake_quantize, fake_quantize_excluding_token, quantize_weights
from .quant_spec import GRANULARITIES, QuantSpec

__all__ = [
    "GRANULARITIES",
    "QuantSpec",
    "calibrate_static_scales",
    "compute_scale",
    "fake_quantize",
    "fake_quantize_excluding_token",
    "quantize_weights",
    "rescale",
]
