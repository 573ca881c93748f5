#!/usr/bin/env python3

from collections import OrderedDict

import torch

from ..sites import Site
from ..utils.errors import ConfigError, ShapeError, check_finite
from ..utils.memoize import cached
from .config import ModelConfig
from .decoder import LlamaDecoder


def weight_shapes(config):
    """Every weight name of a decoder with configuration `config`, with its shape, in canonical order."""
    return OrderedDict((name, tuple(buf.shape)) for name, buf in LlamaDecoder(config).named_buffers())


def weight_name(layer, kind):
    """The weight (or gain) tensor name of projection / norm `kind` in layer `layer` (1-based)."""
    prefix = f"layers.{layer - 1}"
    if kind in ("q", "k", "v", "out"):
        return f"{prefix}.attn.{kind}.weight"
    if kind in ("gate", "up", "down"):
        return f"{prefix}.mlp.{kind}.weight"
    if kind in ("rmsnorm_in", "rmsnorm_post"):
        return f"{prefix}.{kind}.gamma"
    raise ConfigError(f"Unknown site kind {kind!r}")


class ModelBundle(object):
    """
    A decoder configuration, its named weights and (optionally) calibrated static scales.
    Bundles are immutable: the weights are copied on construction and never modified afterwards.

    Args:
        :attr:`config` (:class:`ModelConfig`)
        :attr:`weights` (dict): name -> Tensor for every name of :func:`weight_shapes`
        :attr:`static_scales` (dict, optional): :class:`spikequant.sites.Site` -> scale
        :attr:`scale_bits` (int): bit-width the static scales were calibrated for. Default: 8
        :attr:`model_id` (str, optional)
        :attr:`injection` (:class:`spikequant.models.SpikeInjectionSpec`, optional): how a synthetic
            model was spiked, kept for provenance
    """

    def __init__(self, config, weights, static_scales=None, scale_bits=8, model_id=None, injection=None):
        if not isinstance(config, ModelConfig):
            raise ConfigError(f"Expected a ModelConfig, got {config.__class__.__name__}")
        expected = weight_shapes(config)
        missing = [name for name in expected if name not in weights]
        unknown = [name for name in weights if name not in expected]
        if missing or unknown:
            raise ConfigError(f"Weights do not match the config: missing {missing}, unknown {unknown}")

        self.weights = OrderedDict()
        for name, shape in expected.items():
            tensor = torch.as_tensor(weights[name], dtype=torch.float32)
            if tuple(tensor.shape) != shape:
                raise ShapeError(f"Weight {name} should have shape {shape}, got {tuple(tensor.shape)}")
            self.weights[name] = check_finite(tensor.clone(), name)

        if static_scales is not None:
            static_scales = OrderedDict(
                (site, float(static_scales[site])) for site in sorted(static_scales, key=Site.sort_key)
            )
        self.config = config
        self.static_scales = static_scales
        self.scale_bits = scale_bits
        self.model_id = model_id if model_id is not None else "model"
        self.injection = injection

    @cached(name="decoder")
    def decoder(self):
        """The executable :class:`LlamaDecoder`, built once per bundle."""
        return LlamaDecoder(self.config).initialize(**self.weights)

    def weight(self, layer, kind):
        return self.weights[weight_name(layer, kind)]

    def with_static_scales(self, static_scales, scale_bits=8):
        return ModelBundle(
            self.config,
            self.weights,
            static_scales=static_scales,
            scale_bits=scale_bits,
            model_id=self.model_id,
            injection=self.injection,
        )

    def num_weights(self):
        return sum(tensor.numel() for tensor in self.weights.values())

    def __repr__(self):
        return f"ModelBundle({self.model_id!r}, {self.config!r})"
