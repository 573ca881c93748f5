#!/usr/bin/env python3

import math
from collections import OrderedDict

from .. import settings
from ..utils.errors import ConfigError


class ModelConfig(object):
    """
    Hyperparameters of a LLaMA-architecture decoder (pre-norm, RoPE attention, gated SiLU MLP).

    Args:
        :attr:`n_layers` (int): Default: 8
        :attr:`d_model` (int): Default: 64
        :attr:`n_heads` (int): must divide `d_model` into an even head dimension. Default: 4
        :attr:`d_ff` (int): hidden width of the MLP. Default: 172
        :attr:`vocab_size` (int): Default: 256 (byte-level)
        :attr:`rope_base` (float, optional): Default: :class:`spikequant.settings.rope_base`
        :attr:`rms_eps` (float, optional): Default: :class:`spikequant.settings.rms_eps`
        :attr:`max_context` (int, optional): Default: :class:`spikequant.settings.max_context` (2048)
    """

    def __init__(
        self,
        n_layers=8,
        d_model=64,
        n_heads=4,
        d_ff=172,
        vocab_size=256,
        rope_base=None,
        rms_eps=None,
        max_context=None,
    ):
        self.n_layers = n_layers
        self.d_model = d_model
        self.n_heads = n_heads
        self.d_ff = d_ff
        self.vocab_size = vocab_size
        self.rope_base = float(rope_base if rope_base is not None else settings.rope_base.value())
        self.rms_eps = float(rms_eps if rms_eps is not None else settings.rms_eps.value())
        self.max_context = max_context if max_context is not None else settings.max_context.value()
        self._validate()

    def _validate(self):
        for name in ("n_layers", "d_model", "n_heads", "d_ff", "vocab_size", "max_context"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.d_model % self.n_heads:
            raise ConfigError(f"d_model ({self.d_model}) is not divisible by n_heads ({self.n_heads})")
        if self.head_dim % 2:
            raise ConfigError(f"The head dimension must be even for rotary embeddings, got {self.head_dim}")
        if not math.isfinite(self.rope_base) or self.rope_base <= 0:
            raise ConfigError(f"rope_base must be positive, got {self.rope_base}")
        if not math.isfinite(self.rms_eps) or self.rms_eps < 0:
            raise ConfigError(f"rms_eps must be non-negative, got {self.rms_eps}")

    @property
    def head_dim(self):
        return self.d_model // self.n_heads

    def projection_shape(self, kind):
        """`(out_features, in_features)` of a linear projection."""
        if kind in ("q", "k", "v", "out"):
            return (self.d_model, self.d_model)
        if kind in ("gate", "up"):
            return (self.d_ff, self.d_model)
        if kind == "down":
            return (self.d_model, self.d_ff)
        raise ConfigError(f"{kind!r} is not a linear projection")

    def to_dict(self):
        return OrderedDict(
            [
                ("n_layers", self.n_layers),
                ("d_model", self.d_model),
                ("n_heads", self.n_heads),
                ("d_ff", self.d_ff),
                ("vocab_size", self.vocab_size),
                ("rope_base", self.rope_base),
                ("rms_eps", self.rms_eps),
                ("max_context", self.max_context),
            ]
        )

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def __eq__(self, other):
        return isinstance(other, ModelConfig) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return "ModelConfig({})".format(", ".join(f"{k}={v!r}" for k, v in self.to_dict().items()))
