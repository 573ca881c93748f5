#!/usr/bin/env python3

import logging

import torch

from ..sites import LINEAR_KINDS, Site
from ..utils.errors import ConfigError
from .quant_spec import QuantSpec

logger = logging.getLogger(__name__)


class _RunningMax(object):
    """Per-site running max of |activation| (a per-run accumulator, merged with `max`)."""

    def __init__(self, sites):
        self.sites = set(sites)
        self.maxima = dict()

    def __call__(self, site, tensor):
        if site not in self.sites:
            return
        amax = float(tensor.abs().max()) if tensor.numel() else 0.0
        self.maxima[site] = max(self.maxima.get(site, 0.0), amax)

    def merge(self, other):
        for site, amax in other.maxima.items():
            self.maxima[site] = max(self.maxima.get(site, 0.0), amax)
        return self


def calibrate_static_scales(model, tokens, sites=None, bits=8):
    r"""
    Calibrate static per-site scales from a token stream: runs the full-precision forward pass,
    records the running max of :math:`|x|` at the input of each site and returns
    :math:`\Delta = \max|x| / (2^{b-1} - 1)` per site (1.0 for a site that only saw zeros).

    Args:
        :attr:`model` (:class:`spikequant.models.ModelBundle`)
        :attr:`tokens` (sequence of int, or a list of sequences to calibrate over several streams)
        :attr:`sites` (list of :class:`spikequant.sites.Site`, optional): Default: the input of every
            linear projection of every layer
        :attr:`bits` (int): Default: 8

    Returns:
        dict mapping :class:`spikequant.sites.Site` to a positive float
    """
    from ..models.evaluation import forward

    qmax = QuantSpec(bits).qmax
    streams = _as_streams(tokens)
    if sites is None:
        sites = [Site(layer, kind) for layer in range(1, model.config.n_layers + 1) for kind in LINEAR_KINDS]
    sites = list(sites)
    for site in sites:
        if site.layer > model.config.n_layers:
            raise ConfigError(f"Cannot calibrate {site}: the model has {model.config.n_layers} layers")

    running_max = _RunningMax(sites)
    for stream in streams:
        shard = _RunningMax(sites)
        forward(model, stream, plan=None, tap=shard)
        running_max.merge(shard)

    scales = dict()
    for site in sites:
        amax = running_max.maxima.get(site, 0.0)
        scales[site] = amax / qmax if amax > 0 else 1.0
        logger.debug(f"{site}: max|x| = {amax:.6g}, scale = {scales[site]:.6g}")
    logger.info(f"Calibrated {len(scales)} static scales at {bits} bits over {len(streams)} stream(s)")
    return scales


def rescale(scale, from_bits, to_bits):
    """Convert a scale calibrated for `from_bits` to `to_bits` (same max|x|, different grid)."""
    return scale * QuantSpec(from_bits).qmax / QuantSpec(to_bits).qmax


def _as_streams(tokens):
    if torch.is_tensor(tokens):
        tokens = tokens.tolist()
    tokens = list(tokens)
    if not len(tokens):
        raise ConfigError("Cannot calibrate on an empty token stream")
    if all(isinstance(t, int) for t in tokens):
        return [tokens]
    streams = [list(stream) for stream in tokens]
    if not all(len(stream) for stream in streams):
        raise ConfigError("Cannot calibrate on an empty token stream")
    return streams
