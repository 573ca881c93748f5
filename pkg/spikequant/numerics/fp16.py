#!/usr/bin/env python3

import torch

from .. import settings
from ..utils.errors import NonFiniteError, check_finite

#: Largest finite binary16 value
FP16_MAX = 65504.0


def fp16_round_tensor(x):
    """
    Round every element of `x` to the binary16 grid (round-to-nearest-even) and return it as float32.
    Idempotent.

    Raises a :class:`spikequant.utils.errors.NonFiniteError` if a magnitude exceeds 65504: such a
    spike cannot be held in FP16 at all.
    """
    x = torch.as_tensor(x, dtype=torch.float32)
    if settings.debug.on():
        check_finite(x, "fp16_round_tensor input")
    overflow = x.abs() > FP16_MAX
    if bool(overflow.any()):
        raise NonFiniteError(
            f"{int(overflow.sum())} value(s) exceed the FP16 range (max |x| = {float(x.abs().max())} > {FP16_MAX})"
        )
    return x.to(torch.float16).to(torch.float32)
