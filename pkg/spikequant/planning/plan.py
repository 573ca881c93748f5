#!/usr/bin/env python3

import logging
from collections import OrderedDict

from .. import settings
from ..quantization import GRANULARITIES, QuantSpec
from ..sites import LINEAR_KINDS, NORM_KINDS
from ..utils.errors import ConfigError, FormatError, PlanError
from ..utils.io import read_json, write_json
from .treatment import FULL, Treatment

logger = logging.getLogger(__name__)

PLAN_SCHEMA_VERSION = 1


def default_scope():
    """The quantizable site kinds: the seven linear projections of a decoder layer."""
    return frozenset(LINEAR_KINDS)


class PrecisionPlan(object):
    """
    Assigns a numeric treatment to every quantizable (linear) site of a decoder.

    Sites listed in `sites` get their own treatment; every other in-scope site gets the default
    treatment (`int<default_bits>`, or full precision when `default_bits` is None). Site kinds
    outside `scope` (and the norms, attention matmuls and softmax, which are never in scope)
    stay in full precision.

    Args:
        :attr:`default_bits` (int or None): Default: 8
        :attr:`granularity` (str): activation granularity of integer treatments. Default: "per_tensor"
        :attr:`scope` (iterable of str, optional): Default: :func:`default_scope`
        :attr:`sites` (dict, optional): maps `(layer, kind)` (1-based layers) to a
            :class:`Treatment` or a treatment string
        :attr:`model_id` (str, optional)
        :attr:`name` (str, optional): label used in metrics tables
        :attr:`weight_bits` (int, optional): bit-width of weights under integer treatments.
            Default: the activation bit-width
        :attr:`apply_high_to_weights` (bool, optional): whether FP16 / FP8 treatments also round
            weights. Default: :class:`spikequant.settings.quantize_high_weights`
        :attr:`seed` (int, optional): the seed that produced a random plan
    """

    def __init__(
        self,
        default_bits=8,
        granularity="per_tensor",
        scope=None,
        sites=None,
        model_id=None,
        name=None,
        weight_bits=None,
        apply_high_to_weights=None,
        seed=None,
    ):
        if default_bits is not None:
            QuantSpec(default_bits)
        if weight_bits is not None:
            QuantSpec(weight_bits)
        if granularity not in GRANULARITIES:
            raise ConfigError(f"granularity must be one of {GRANULARITIES}, got {granularity!r}")

        scope = default_scope() if scope is None else frozenset(scope)
        illegal = scope - frozenset(LINEAR_KINDS)
        if illegal:
            kind = "normalization" if illegal & frozenset(NORM_KINDS) else "unknown"
            raise PlanError(f"Scope may only hold linear projections; got {kind} kinds {sorted(illegal)}")

        treatments = OrderedDict()
        for (layer, kind), treatment in sorted((sites or dict()).items(), key=_site_order):
            if isinstance(layer, bool) or not isinstance(layer, int) or layer < 1:
                raise PlanError(f"Plan layers are numbered from 1, got {layer!r}")
            if kind not in scope:
                raise PlanError(f"Site {kind}@{layer} is outside the plan scope {sorted(scope)}")
            treatments[(layer, kind)] = Treatment.parse(treatment)

        if apply_high_to_weights is None:
            apply_high_to_weights = settings.quantize_high_weights.on()

        self.default_bits = default_bits
        self.granularity = granularity
        self.scope = scope
        self.sites = treatments
        self.model_id = model_id
        self.name = name if name is not None else self._default_name()
        self.weight_bits = weight_bits
        self.apply_high_to_weights = bool(apply_high_to_weights)
        self.seed = seed

    def _default_name(self):
        if self.default_bits is None and not self.sites:
            return "full"
        return f"int{self.default_bits}-{self.granularity}"

    @property
    def default_treatment(self):
        return FULL if self.default_bits is None else Treatment("int", self.default_bits)

    def treatment_for(self, layer, kind):
        """The treatment of the input of projection `kind` in layer `layer` (1-based)."""
        if kind not in self.scope:
            return FULL
        return self.sites.get((layer, kind), self.default_treatment)

    def high_sites(self):
        """Listed sites whose treatment is not integer quantization, in canonical order."""
        return [key for key, treatment in self.sites.items() if not treatment.is_integer]

    def max_layer(self):
        return max((layer for layer, _ in self.sites), default=0)

    def is_full_precision(self):
        """True if no site of any model is treated."""
        if not self.scope:
            return True
        return self.default_bits is None and all(t == FULL for t in self.sites.values())

    def to_dict(self):
        res = OrderedDict()
        res["schema_version"] = PLAN_SCHEMA_VERSION
        res["name"] = self.name
        res["model_id"] = self.model_id
        res["default_bits"] = self.default_bits
        res["weight_bits"] = self.weight_bits
        res["granularity"] = self.granularity
        res["apply_high_to_weights"] = self.apply_high_to_weights
        res["scope"] = [kind for kind in LINEAR_KINDS if kind in self.scope]
        res["sites"] = [
            OrderedDict([("layer", layer), ("kind", kind), ("boundary", "input"), ("treatment", str(treatment))])
            for (layer, kind), treatment in self.sites.items()
        ]
        res["seed"] = self.seed
        return res

    @classmethod
    def from_dict(cls, d):
        try:
            sites = dict()
            for entry in d["sites"]:
                if entry.get("boundary", "input") != "input":
                    raise PlanError(f"Treatments apply to projection inputs, got boundary {entry['boundary']!r}")
                key = (_layer(entry), entry["kind"])
                if key in sites:
                    raise PlanError(f"Site {key[1]}@{key[0]} is listed twice")
                sites[key] = entry["treatment"]
            return cls(
                default_bits=d["default_bits"],
                granularity=d.get("granularity", "per_tensor"),
                scope=d["scope"],
                sites=sites,
                model_id=d.get("model_id"),
                name=d.get("name"),
                weight_bits=d.get("weight_bits"),
                apply_high_to_weights=d.get("apply_high_to_weights"),
                seed=d.get("seed"),
            )
        except (KeyError, TypeError) as e:
            raise FormatError(f"Malformed plan: {e!r}")
        except ConfigError as e:
            raise FormatError(f"Malformed plan: {e}")

    def __eq__(self, other):
        return isinstance(other, PrecisionPlan) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"PrecisionPlan(name={self.name!r}, default={self.default_treatment}, high={len(self.high_sites())})"


def _layer(entry):
    try:
        return int(entry["layer"])
    except ValueError:
        raise FormatError(f"Malformed plan: layer {entry['layer']!r} is not an integer")


def _site_order(item):
    (layer, kind), _ = item
    return (layer, LINEAR_KINDS.index(kind) if kind in LINEAR_KINDS else len(LINEAR_KINDS), str(kind))


def validate_plan(plan, config):
    """
    Check that every site a plan names exists in a model with configuration `config`.
    Raises a :class:`spikequant.utils.errors.PlanError` otherwise.
    """
    unknown = [f"{kind}@{layer}" for layer, kind in plan.sites if layer > config.n_layers]
    if unknown:
        raise PlanError(f"Plan {plan.name!r} names sites a {config.n_layers}-layer model lacks: {', '.join(unknown)}")
    return plan


def save_plan(plan, path):
    write_json(path, plan.to_dict())
    logger.info(f"Wrote plan {plan.name!r} ({len(plan.sites)} listed sites) to {path}")
    return path


def load_plan(path):
    return PrecisionPlan.from_dict(read_json(path, schema_version=PLAN_SCHEMA_VERSION))
