#!/usr/bin/env python3

import torch

from .. import settings
from ..utils.errors import check_finite


def silu(x):
    if settings.debug.on():
        check_finite(x, "silu input")
    return x * torch.sigmoid(x)
