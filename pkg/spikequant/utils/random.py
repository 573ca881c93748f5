#!/usr/bin/env python3

import torch

from .errors import ConfigError


def make_generator(seed):
    """
    A CPU :class:`torch.Generator` (Mersenne Twister, MT19937) seeded with `seed`.
    Every random draw in the library goes through an explicit generator built here,
    so results depend on the seed only, never on global RNG state.
    """
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    generator = torch.Generator(device="cpu")
    generator.manual_seed(seed)
    return generator
