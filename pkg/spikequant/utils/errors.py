#!/usr/bin/env python3


class SpikeQuantError(Exception):
    pass


class ShapeError(SpikeQuantError, ValueError):
    pass


class NonFiniteError(SpikeQuantError, ValueError):
    pass


class ConfigError(SpikeQuantError, ValueError):
    pass


class PlanError(SpikeQuantError, ValueError):
    pass


class FormatError(SpikeQuantError, ValueError):
    pass


class InvariantViolation(SpikeQuantError, RuntimeError):
    pass


def check_finite(tensor, name="input"):
    """Raise a :class:`NonFiniteError` if `tensor` holds a NaN or an infinity."""
    if not bool(tensor.isfinite().all()):
        raise NonFiniteError(f"{name} ({tuple(tensor.shape)}) contains non-finite values")
    return tensor


__all__ = [
    "SpikeQuantError",
    "ShapeError",
    "NonFiniteError",
    "ConfigError",
    "PlanError",
    "FormatError",
    "InvariantViolation",
    "check_finite",
]
