#!/usr/bin/env python3

import torch

from .. import settings
from ..sites import sorted_sites
from ..utils.errors import ConfigError, ShapeError


def detect_sigma(x, k=None):
    """
    Flat indices of the values of `x` farther than `k` (population) standard deviations from the mean.

    Args:
        :attr:`x` (Tensor): at least 2 elements
        :attr:`k` (float, optional): Default: :class:`spikequant.settings.sigma_multiplier` (6)

    Returns:
        :obj:`LongTensor` of flat indices, increasing
    """
    if k is None:
        k = settings.sigma_multiplier.value()
    x = torch.as_tensor(x).reshape(-1).double()
    if x.numel() < 2:
        raise ShapeError(f"detect_sigma needs at least 2 values, got {x.numel()}")
    mean = x.mean()
    std = x.std(unbiased=False)
    return torch.nonzero((x - mean).abs() > k * std).reshape(-1)


def detect_order_of_magnitude(x, factor=None):
    """
    Flat indices of the values of `x` whose magnitude is at least `factor` times the mean absolute value.
    An all-zero tensor has no such values.

    Args:
        :attr:`x` (Tensor)
        :attr:`factor` (float, optional): Default: :class:`spikequant.settings.order_of_magnitude_factor` (10)
    """
    if factor is None:
        factor = settings.order_of_magnitude_factor.value()
    magnitude = torch.as_tensor(x).reshape(-1).double().abs()
    if magnitude.numel() == 0:
        return torch.zeros(0, dtype=torch.long)
    mean_abs = magnitude.mean()
    if float(mean_abs) == 0:
        return torch.zeros(0, dtype=torch.long)
    return torch.nonzero(magnitude >= factor * mean_abs).reshape(-1)


def detect_llmint8(magnitudes, magnitude=None, layer_fraction=None, token_fraction=None):
    """
    The LLM.int8() outlier-feature criterion. A feature dimension is an outlier if values of magnitude
    at least `magnitude` occur in at least `layer_fraction` of the layers and at least `token_fraction`
    of the token positions.

    Args:
        :attr:`magnitudes` (Tensor layers x tokens x dims): activation magnitudes (or values)
        :attr:`magnitude` (float, optional): Default: :class:`spikequant.settings.llmint8_magnitude` (6.0)
        :attr:`layer_fraction` (float, optional): Default: :class:`spikequant.settings.llmint8_layer_fraction`
        :attr:`token_fraction` (float, optional): Default: :class:`spikequant.settings.llmint8_token_fraction`

    Returns:
        :obj:`LongTensor` of flagged dimensions, increasing
    """
    magnitude = settings.llmint8_magnitude.value() if magnitude is None else magnitude
    layer_fraction = settings.llmint8_layer_fraction.value() if layer_fraction is None else layer_fraction
    token_fraction = settings.llmint8_token_fraction.value() if token_fraction is None else token_fraction

    magnitudes = torch.as_tensor(magnitudes)
    if magnitudes.dim() != 3 or magnitudes.size(0) < 1 or magnitudes.size(1) < 1:
        raise ShapeError(f"Expected a (layers x tokens x dims) tensor with data, got {tuple(magnitudes.shape)}")
    n_layers, n_tokens, _ = magnitudes.shape

    hits = magnitudes.abs() >= magnitude
    layers_hit = hits.any(dim=1).sum(dim=0).double()
    tokens_hit = hits.any(dim=0).sum(dim=0).double()
    flagged = (layers_hit >= layer_fraction * n_layers) & (tokens_hit >= token_fraction * n_tokens) & (layers_hit > 0)
    return torch.nonzero(flagged).reshape(-1)


def detect_threshold(report, theta=None):
    """
    Sites (any kind, either boundary) of a spike report whose max :math:`|x|` exceeds `theta`.

    Args:
        :attr:`report` (:class:`SpikeReport`)
        :attr:`theta` (float, optional): Default: :class:`spikequant.settings.spike_threshold` (100)

    Returns:
        list of :class:`spikequant.sites.Site`, in canonical order
    """
    if not report.stats:
        raise ConfigError("Cannot detect spikes in an empty report")
    if theta is None:
        theta = settings.spike_threshold.value()
    return sorted_sites(stats.site for stats in report.stats if stats.max_abs > theta)


def detect_llmint8_report(report, kind, boundary="output"):
    """
    Apply :func:`detect_llmint8` to the activations a report recorded at every layer's `kind` site.
    Rebuilds the (layers x tokens x dims) hit pattern from the magnitude hits stored in the report.
    """
    stats = [s for s in report.stats if s.site.kind == kind and s.site.boundary == boundary]
    if not stats:
        raise ConfigError(f"The report holds no {kind} {boundary} statistics")
    dims = len(stats[0].channel_max)
    magnitude = report.settings["llmint8_magnitude"]
    magnitudes = torch.zeros(len(stats), report.n_tokens, dims, dtype=torch.float64)
    for i, site_stats in enumerate(stats):
        for token, channel in site_stats.hits:
            magnitudes[i, token, channel] = magnitude
    return detect_llmint8(magnitudes, magnitude=magnitude)
