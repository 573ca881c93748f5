#!/usr/bin/env python3

from collections import namedtuple

from .utils.errors import ConfigError, FormatError

#: Linear projections of a decoder layer, in execution order. These are the only quantizable sites.
LINEAR_KINDS = ("q", "k", "v", "out", "gate", "up", "down")
#: RMS normalizations of a decoder layer. Always kept in full precision.
NORM_KINDS = ("rmsnorm_in", "rmsnorm_post")
SITE_KINDS = LINEAR_KINDS + NORM_KINDS
BOUNDARIES = ("input", "output")


class Site(namedtuple("Site", ["layer", "kind", "boundary"])):
    """
    A tap point in the decoder: one boundary (input or output) of one projection or
    normalization of one layer. Layers are numbered from 1.
    """

    __slots__ = ()

    def __new__(cls, layer, kind, boundary="input"):
        if isinstance(layer, bool) or not isinstance(layer, int) or layer < 1:
            raise ConfigError(f"Site layers are numbered from 1, got {layer!r}")
        if kind not in SITE_KINDS:
            raise ConfigError(f"Unknown site kind {kind!r}. Expected one of {SITE_KINDS}")
        if boundary not in BOUNDARIES:
            raise ConfigError(f"Unknown site boundary {boundary!r}. Expected one of {BOUNDARIES}")
        return super(Site, cls).__new__(cls, layer, kind, boundary)

    def sort_key(self):
        return (self.layer, SITE_KINDS.index(self.kind), BOUNDARIES.index(self.boundary))

    def __str__(self):
        return f"{self.kind}@{self.layer}:{self.boundary}"

    def to_dict(self):
        return {"layer": self.layer, "kind": self.kind, "boundary": self.boundary}

    @classmethod
    def from_dict(cls, d):
        try:
            layer = int(d["layer"])
        except (KeyError, TypeError, ValueError):
            raise FormatError(f"Malformed site {d!r}")
        return cls(layer, d["kind"], d.get("boundary", "input"))


def sorted_sites(sites):
    return sorted(sites, key=Site.sort_key)


def all_sites(n_layers, kinds=SITE_KINDS, boundaries=BOUNDARIES):
    """Every site of an `n_layers` decoder, in canonical order."""
    return [
        Site(layer, kind, boundary) for layer in range(1, n_layers + 1) for kind in kinds for boundary in boundaries
    ]
