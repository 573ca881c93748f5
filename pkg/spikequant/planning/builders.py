#!/usr/bin/env python3

import logging

import torch

from .. import settings
from ..utils.errors import ConfigError, PlanError
from ..utils.random import make_generator
from .plan import PrecisionPlan
from .treatment import Treatment

logger = logging.getLogger(__name__)

#: Projections that receive targeted high-precision treatment
TARGET_KINDS = ("out", "down")


def spike_sites(report, theta):
    """`(layer, kind)` pairs of down / out projections whose input or output max |x| exceeds `theta`."""
    flagged = set()
    for stats in report.stats:
        if stats.site.kind in TARGET_KINDS and stats.max_abs > theta:
            flagged.add((stats.site.layer, stats.site.kind))
    return flagged


def build_targeted_plan(report, theta=None, high="fp16", bits=8, granularity="per_tensor", **kwargs):
    """
    Keep spike-bearing projections in high precision and quantize everything else.

    Every down / out projection whose input or output max :math:`|x|` in `report` exceeds `theta`
    gets the `high` treatment; every other linear site gets int(`bits`).

    Args:
        :attr:`report` (:class:`spikequant.profiling.SpikeReport`)
        :attr:`theta` (float, optional): Default: :class:`spikequant.settings.spike_threshold` (100)
        :attr:`high` (str or :class:`Treatment`): "fp16", "fp8_e5m2", "fp8_e4m3" or "full". Default: "fp16"
        :attr:`bits` (int): Default: 8
        :attr:`granularity` (str): Default: "per_tensor"
        :attr:`kwargs`: forwarded to :class:`PrecisionPlan`

    Returns:
        :class:`PrecisionPlan`
    """
    if not report.stats:
        raise ConfigError("Cannot plan from an empty spike report")
    if theta is None:
        theta = settings.spike_threshold.value()
    if not theta > 0:
        raise ConfigError(f"The spike threshold must be positive, got {theta}")
    high = Treatment.parse(high)
    if high.is_integer:
        raise ConfigError(f"The high-precision treatment cannot be integer quantization, got {high}")

    flagged = spike_sites(report, theta)
    kwargs.setdefault("model_id", report.model_id)
    kwargs.setdefault("name", f"mix-{high}")
    plan = PrecisionPlan(default_bits=bits, granularity=granularity, sites={key: high for key in flagged}, **kwargs)
    logger.info(
        f"Targeted plan {plan.name!r}: {len(flagged)} site(s) above {theta:g} in {high}: "
        + (", ".join(f"{kind}@{layer}" for layer, kind in plan.sites) or "none")
    )
    return plan


def build_random_plan(report, reference, seed):
    """
    The random-placement ablation of a targeted plan: the same number of high-precision sites,
    drawn uniformly without replacement from the down / out projections the reference does not
    treat. Deterministic given `seed`.

    Args:
        :attr:`report` (:class:`spikequant.profiling.SpikeReport`): supplies the layer count
        :attr:`reference` (:class:`PrecisionPlan`): a plan with at least one high-precision site
        :attr:`seed` (int)

    Returns:
        :class:`PrecisionPlan`
    """
    if reference is None:
        raise PlanError("A random plan needs a reference plan")
    high_sites = reference.high_sites()
    n = len(high_sites)
    if n < 1:
        raise PlanError(f"Reference plan {reference.name!r} has no high-precision sites to relocate")

    taken = set(high_sites)
    candidates = [
        (layer, kind)
        for layer in range(1, report.n_layers + 1)
        for kind in TARGET_KINDS
        if kind in reference.scope and (layer, kind) not in taken
    ]
    if len(candidates) < n:
        raise PlanError(f"Only {len(candidates)} candidate site(s) for {n} random high-precision site(s)")

    perm = torch.randperm(len(candidates), generator=make_generator(seed))
    chosen = [candidates[i] for i in perm[:n].tolist()]
    high = reference.sites[high_sites[0]]
    plan = PrecisionPlan(
        default_bits=reference.default_bits,
        granularity=reference.granularity,
        scope=reference.scope,
        sites={key: high for key in chosen},
        model_id=reference.model_id,
        name=f"random-{high}-seed{seed}",
        weight_bits=reference.weight_bits,
        apply_high_to_weights=reference.apply_high_to_weights,
        seed=seed,
    )
    logger.info(f"Random plan {plan.name!r}: " + ", ".join(f"{kind}@{layer}" for layer, kind in plan.sites))
    return plan


def build_uniform_plan(bits=8, granularity="per_tensor", **kwargs):
    """The naive plan: every linear site int(`bits`)."""
    kwargs.setdefault("name", f"naive-int{bits}-{granularity}")
    return PrecisionPlan(default_bits=bits, granularity=granularity, **kwargs)


def build_full_plan(**kwargs):
    """A plan that leaves every site in full precision."""
    kwargs.setdefault("name", "full")
    return PrecisionPlan(default_bits=None, **kwargs)
