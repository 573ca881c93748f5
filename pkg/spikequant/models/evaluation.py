#!/usr/bin/env python3

import math
from collections import OrderedDict

import torch

from ..planning import validate_plan
from ..utils.errors import ConfigError
from .decoder import RunContext


def as_token_tensor(tokens, config):
    """Validate a token sequence against `config` and return it as a LongTensor."""
    if torch.is_tensor(tokens):
        tokens = tokens.tolist()
    tokens = list(tokens)
    if not tokens:
        raise ConfigError("The token stream is empty")
    if any(isinstance(t, bool) or not isinstance(t, int) for t in tokens):
        raise ConfigError("Token ids must be integers")
    bad = [t for t in tokens if not 0 <= t < config.vocab_size]
    if bad:
        raise ConfigError(f"Token id {bad[0]} is outside the vocabulary [0, {config.vocab_size})")
    if len(tokens) > config.max_context:
        raise ConfigError(f"{len(tokens)} tokens exceed the context window of {config.max_context}")
    return torch.tensor(tokens, dtype=torch.long)


def forward(model, tokens, plan=None, static_scales=None, scale_bits=None, exclude_token=None, tap=None):
    """
    Run the decoder on one token sequence.

    Args:
        :attr:`model` (:class:`spikequant.models.ModelBundle`)
        :attr:`tokens` (sequence of int): at most `max_context` ids below `vocab_size`
        :attr:`plan` (:class:`spikequant.planning.PrecisionPlan`, optional): None runs full precision
        :attr:`static_scales` (dict or bool, optional): Site -> scale for static integer quantization.
            `True` uses the scales stored in the bundle. Default: dynamic scales
        :attr:`scale_bits` (int, optional): bit-width the static scales were calibrated for.
            Default: the bundle's, or 8
        :attr:`exclude_token` (int, optional): token row that integer sites leave unquantized
        :attr:`tap` (callable, optional): `tap(site, tensor)`, called at every site boundary of this run

    Returns:
        :obj:`Tensor` (seq x vocab_size) logits
    """
    token_tensor = as_token_tensor(tokens, model.config)
    if plan is not None:
        validate_plan(plan, model.config)
    if static_scales is True:
        if model.static_scales is None:
            raise ConfigError(f"{model.model_id} carries no calibrated static scales")
        static_scales = model.static_scales
        scale_bits = scale_bits if scale_bits is not None else model.scale_bits
    if exclude_token is not None and not 0 <= exclude_token < len(token_tensor):
        raise ConfigError(f"Excluded token {exclude_token} is out of range for {len(token_tensor)} tokens")

    context = RunContext(
        plan=plan,
        static_scales=static_scales or None,
        scale_bits=scale_bits if scale_bits is not None else 8,
        exclude_token=exclude_token,
        tap=tap,
    )
    with torch.no_grad():
        return model.decoder()(token_tensor, context)


def perplexity_from_logits(logits, tokens):
    """`exp` of the mean next-token negative log-likelihood over positions 1..seq-1, in double precision."""
    targets = torch.as_tensor(tokens, dtype=torch.long)
    if targets.numel() < 2:
        raise ConfigError("Perplexity needs at least 2 tokens")
    log_probs = torch.log_softmax(logits[:-1].double(), dim=-1)
    nll = -log_probs.gather(-1, targets[1:].unsqueeze(-1)).mean()
    return math.exp(float(nll))


def perplexity(model, tokens, plan=None, **kwargs):
    """
    Perplexity of `tokens` under the model (quantized per `plan`).
    Extra keyword arguments go to :func:`forward`.
    """
    token_tensor = as_token_tensor(tokens, model.config)
    if len(token_tensor) < 2:
        raise ConfigError("Perplexity needs at least 2 tokens")
    return perplexity_from_logits(forward(model, token_tensor, plan=plan, **kwargs), token_tensor)


def logit_errors(reference, logits):
    """Elementwise MSE and max absolute deviation between two logit tensors, in double precision."""
    diff = logits.double() - reference.double()
    return float(diff.pow(2).mean()), float(diff.abs().max())


def quant_error(model, tokens, plan, **kwargs):
    """
    Compare a quantized run against full precision.

    Returns:
        OrderedDict with `logit_mse`, `logit_max_abs_err`, `ppl_delta` (quantized minus full),
        `ppl` (quantized) and `ppl_full`
    """
    token_tensor = as_token_tensor(tokens, model.config)
    if len(token_tensor) < 2:
        raise ConfigError("Perplexity needs at least 2 tokens")
    reference = forward(model, token_tensor, plan=None)
    logits = forward(model, token_tensor, plan=plan, **kwargs)
    mse, max_abs = logit_errors(reference, logits)
    ppl_full = perplexity_from_logits(reference, token_tensor)
    ppl = perplexity_from_logits(logits, token_tensor)
    return OrderedDict(
        [
            ("logit_mse", mse),
            ("logit_max_abs_err", max_abs),
            ("ppl_delta", ppl - ppl_full),
            ("ppl", ppl),
            ("ppl_full", ppl_full),
        ]
    )
