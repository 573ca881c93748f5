#!/usr/bin/env python3

from .memoize import cached
from .random import make_generator
from . import errors
from . import io


def prod(items):
    """Product of the items of a sequence (1 for an empty one)."""
    if len(items):
        res = items[0]
        for item in items[1:]:
            res = res * item
        return res
    else:
        return 1


__all__ = [
    "cached",
    "errors",
    "io",
    "make_generator",
    "prod",
]
