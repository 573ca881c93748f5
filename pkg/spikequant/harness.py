#!/usr/bin/env python3

import logging
from collections import OrderedDict

from .models import quant_error
from .planning import build_random_plan, build_targeted_plan, build_uniform_plan
from .profiling import collect_stats

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("plan", "bits", "granularity", "ppl", "ppl_delta", "logit_mse", "logit_max_abs_err")
_AVERAGED = ("ppl", "ppl_delta", "logit_mse", "logit_max_abs_err")


def evaluate_plan(model, tokens, plan, **kwargs):
    """One metrics row for `plan`: quantization error against the full-precision model."""
    errors = quant_error(model, tokens, plan, **kwargs)
    row = OrderedDict(
        [
            ("plan", plan.name),
            ("bits", plan.default_bits),
            ("granularity", plan.granularity),
            ("ppl", errors["ppl"]),
            ("ppl_delta", errors["ppl_delta"]),
            ("logit_mse", errors["logit_mse"]),
            ("logit_max_abs_err", errors["logit_max_abs_err"]),
        ]
    )
    logger.debug(f"{plan.name}: logit_mse={row['logit_mse']:.6g} ppl_delta={row['ppl_delta']:.6g}")
    return row


def average_rows(rows, name):
    """The metric-wise mean of several rows of the same setting."""
    res = OrderedDict(rows[0])
    res["plan"] = name
    for column in _AVERAGED:
        res[column] = sum(row[column] for row in rows) / len(rows)
    return res


def targeted_vs_random(
    model, tokens, report, seeds=(0, 1, 2), high="fp16", bits=8, granularity="per_tensor", theta=None
):
    """
    The random-placement ablation: a targeted plan against random plans with as many high-precision
    sites, one per seed.

    Returns:
        OrderedDict with the `targeted` row, the `random` rows, their `random_mean` and the `ratio` of
        mean random logit MSE to targeted logit MSE
    """
    targeted = build_targeted_plan(report, theta=theta, high=high, bits=bits, granularity=granularity)
    targeted_row = evaluate_plan(model, tokens, targeted)
    random_rows = [evaluate_plan(model, tokens, build_random_plan(report, targeted, seed)) for seed in seeds]
    random_mean = average_rows(random_rows, f"random-{high}-mean")
    ratio = random_mean["logit_mse"] / targeted_row["logit_mse"] if targeted_row["logit_mse"] > 0 else float("inf")
    logger.info(f"Random / targeted logit MSE ratio over {len(seeds)} seeds: {ratio:.3f}")
    return OrderedDict(
        [("targeted", targeted_row), ("random", random_rows), ("random_mean", random_mean), ("ratio", ratio)]
    )


def bot_exclusion(model, tokens, bits=8, granularity="per_tensor", excluded=0):
    """
    Uniform integer quantization with and without leaving token `excluded` (the beginning-of-text token)
    unquantized.

    Returns:
        OrderedDict with the `quantized` and `excluded` metrics rows
    """
    plan = build_uniform_plan(bits, granularity, model_id=model.model_id)
    quantized = evaluate_plan(model, tokens, plan)
    excluded_row = evaluate_plan(model, tokens, plan, exclude_token=excluded)
    excluded_row["plan"] = f"{plan.name}-without-token{excluded}"
    return OrderedDict([("quantized", quantized), ("excluded", excluded_row)])


def run_sweep(
    model,
    tokens,
    bits=(6, 8),
    granularities=("per_tensor", "per_token"),
    seeds=(0, 1, 2),
    theta=None,
    report=None,
):
    """
    The experiment grid: for every bit-width and granularity, the naive uniform plan, targeted plans
    with FP16 and FP8 (E5M2) high precision, and random FP16 placement averaged over `seeds`.

    Args:
        :attr:`model` (:class:`spikequant.models.ModelBundle`)
        :attr:`tokens` (sequence of int): evaluation stream (also used for profiling when `report` is None)
        :attr:`bits` (iterable of int)
        :attr:`granularities` (iterable of str)
        :attr:`seeds` (iterable of int): random-plan seeds. Empty skips the random rows
        :attr:`theta` (float, optional): spike threshold
        :attr:`report` (:class:`spikequant.profiling.SpikeReport`, optional)

    Returns:
        list of metrics rows (OrderedDicts keyed by :data:`METRIC_COLUMNS`)
    """
    if report is None:
        report = collect_stats(model, tokens)
    rows = []
    for b in bits:
        for granularity in granularities:
            rows.append(evaluate_plan(model, tokens, build_uniform_plan(b, granularity, model_id=model.model_id)))
            targeted = None
            for high in ("fp16", "fp8_e5m2"):
                plan = build_targeted_plan(report, theta=theta, high=high, bits=b, granularity=granularity)
                rows.append(evaluate_plan(model, tokens, plan))
                targeted = targeted or plan
            if not seeds:
                continue
            if not targeted.high_sites():
                logger.warning(f"No spike sites at int{b}-{granularity}: skipping random placement")
                continue
            random_rows = [evaluate_plan(model, tokens, build_random_plan(report, targeted, seed)) for seed in seeds]
            rows.append(average_rows(random_rows, "random-fp16-mean"))
    logger.info(f"Sweep finished: {len(rows)} rows")
    return rows
