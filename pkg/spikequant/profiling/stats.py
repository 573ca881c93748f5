#!/usr/bin/env python3

import math
from collections import OrderedDict

import torch

from .. import settings
from ..sites import Site
from ..utils.errors import InvariantViolation
from .detection import detect_order_of_magnitude, detect_sigma


class SiteStats(object):
    """
    Activation statistics of one site, exact over every value observed there.

    Attributes:
        :attr:`site` (:class:`spikequant.sites.Site`)
        :attr:`max_abs` (float): largest magnitude
        :attr:`mean` (float)
        :attr:`std` (float): population standard deviation
        :attr:`token_argmax` (int): position of `max_abs` within its sequence
        :attr:`count` (int): number of values observed
        :attr:`channel_max` (list of float): largest magnitude per feature channel
        :attr:`sigma_outliers` (int): values flagged by :func:`detect_sigma`, per tensor
        :attr:`magnitude_outliers` (int): values flagged by :func:`detect_order_of_magnitude`, per tensor
        :attr:`hits` (list of (token, channel)): where the magnitude reached the LLM.int8() threshold;
            tokens are numbered across all streams of a collection
    """

    def __init__(
        self,
        site,
        max_abs=0.0,
        mean=0.0,
        m2=0.0,
        token_argmax=0,
        count=0,
        channel_max=None,
        sigma_outliers=0,
        magnitude_outliers=0,
        hits=None,
    ):
        self.site = site
        self.max_abs = max_abs
        self.mean = mean
        self.m2 = m2
        self.token_argmax = token_argmax
        self.count = count
        self.channel_max = list(channel_max) if channel_max is not None else []
        self.sigma_outliers = sigma_outliers
        self.magnitude_outliers = magnitude_outliers
        self.hits = list(hits) if hits is not None else []

    @classmethod
    def from_tensor(cls, site, x, token_offset=0):
        """Statistics of one (tokens x features) activation."""
        x = x.detach().reshape(-1, x.size(-1))
        magnitude = x.abs()
        values = x.double()
        mean = float(values.mean())
        hit_positions = torch.nonzero(magnitude >= settings.llmint8_magnitude.value()).tolist()
        return cls(
            site,
            max_abs=float(magnitude.max()),
            mean=mean,
            m2=float((values - mean).pow(2).sum()),
            token_argmax=int(magnitude.amax(dim=-1).argmax()),
            count=x.numel(),
            channel_max=magnitude.amax(dim=0).tolist(),
            sigma_outliers=len(detect_sigma(x)) if x.numel() >= 2 else 0,
            magnitude_outliers=len(detect_order_of_magnitude(x)),
            hits=[(token + token_offset, channel) for token, channel in hit_positions],
        )

    @property
    def std(self):
        return math.sqrt(self.m2 / self.count) if self.count else 0.0

    def merge(self, other):
        """
        Combine the statistics of two disjoint sets of observations of the same site
        (max, count-weighted mean, parallel variance). Associative and commutative up to rounding.
        """
        if other.site != self.site:
            raise ValueError(f"Cannot merge statistics of {self.site} and {other.site}")
        if not other.count:
            return self.copy()
        if not self.count:
            return other.copy()
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        top = self if self.max_abs >= other.max_abs else other
        if len(self.channel_max) != len(other.channel_max):
            raise ValueError(f"Channel counts of {self.site} differ")
        return SiteStats(
            self.site,
            max_abs=top.max_abs,
            mean=mean,
            m2=m2,
            token_argmax=top.token_argmax,
            count=count,
            channel_max=[max(a, b) for a, b in zip(self.channel_max, other.channel_max)],
            sigma_outliers=self.sigma_outliers + other.sigma_outliers,
            magnitude_outliers=self.magnitude_outliers + other.magnitude_outliers,
            hits=sorted(set(self.hits) | set(other.hits)),
        )

    def copy(self):
        return SiteStats.from_dict(self.to_dict())

    def check(self, seq_len=None):
        """Raise an :class:`spikequant.utils.errors.InvariantViolation` if the statistics are inconsistent."""
        if not self.count > 0:
            raise InvariantViolation(f"{self.site}: no values observed")
        if not self.max_abs >= 0 or not self.m2 >= 0:
            raise InvariantViolation(f"{self.site}: negative max_abs or variance")
        if seq_len is not None and not 0 <= self.token_argmax < seq_len:
            raise InvariantViolation(f"{self.site}: token_argmax {self.token_argmax} outside [0, {seq_len})")
        if self.channel_max and max(self.channel_max) != self.max_abs:
            raise InvariantViolation(f"{self.site}: channel maxima disagree with max_abs")

    def to_dict(self):
        return OrderedDict(
            [
                ("site", self.site.to_dict()),
                ("max_abs", self.max_abs),
                ("mean", self.mean),
                ("std", self.std),
                ("m2", self.m2),
                ("token_argmax", self.token_argmax),
                ("count", self.count),
                ("sigma_outliers", self.sigma_outliers),
                ("magnitude_outliers", self.magnitude_outliers),
                ("channel_max", self.channel_max),
                ("hits", [list(hit) for hit in self.hits]),
            ]
        )

    @classmethod
    def from_dict(cls, d):
        return cls(
            Site.from_dict(d["site"]),
            max_abs=d["max_abs"],
            mean=d["mean"],
            m2=d["m2"],
            token_argmax=d["token_argmax"],
            count=d["count"],
            channel_max=d["channel_max"],
            sigma_outliers=d["sigma_outliers"],
            magnitude_outliers=d["magnitude_outliers"],
            hits=[tuple(hit) for hit in d["hits"]],
        )

    def __repr__(self):
        return f"SiteStats({self.site}, max_abs={self.max_abs:.6g}, mean={self.mean:.6g}, std={self.std:.6g})"


class StatsCollector(object):
    """
    A forward-pass tap accumulating :class:`SiteStats` per site. One collector serves one collection:
    call :meth:`next_stream` between token streams.
    """

    def __init__(self, sites=None):
        self.sites = set(sites) if sites is not None else None
        self.stats = OrderedDict()
        self.token_offset = 0

    def __call__(self, site, tensor):
        if self.sites is not None and site not in self.sites:
            return
        observed = SiteStats.from_tensor(site, tensor, token_offset=self.token_offset)
        if site in self.stats:
            observed = self.stats[site].merge(observed)
        self.stats[site] = observed

    def next_stream(self, stream_len):
        self.token_offset += stream_len
