#!/usr/bin/env python3

import math

import torch
from torch import nn

from ..functions import matmul, rms_norm, rope_rotate, silu, softmax_rows
from ..module import Module
from ..planning import FULL
from ..quantization import rescale
from ..sites import Site
from ..utils.errors import PlanError
from ..utils.memoize import cached


class RunContext(object):
    """
    Per-forward state: the precision plan, static scales, BOT exclusion and the activation tap.
    A fresh context is built for every call of :func:`spikequant.models.forward`, so the decoder
    modules themselves never hold run state.

    Args:
        :attr:`plan` (:class:`spikequant.planning.PrecisionPlan`, optional): None runs full precision
        :attr:`static_scales` (dict, optional): :class:`spikequant.sites.Site` -> calibrated scale
        :attr:`scale_bits` (int): bit-width the static scales were calibrated for. Default: 8
        :attr:`exclude_token` (int, optional): token row left unquantized at integer sites
        :attr:`tap` (callable, optional): called as `tap(site, tensor)` at every site boundary
    """

    def __init__(self, plan=None, static_scales=None, scale_bits=8, exclude_token=None, tap=None):
        self.plan = plan
        self.static_scales = static_scales
        self.scale_bits = scale_bits
        self.exclude_token = exclude_token
        self.tap = tap

    def emit(self, layer, kind, boundary, tensor):
        if self.tap is not None:
            self.tap(Site(layer, kind, boundary), tensor)

    def treatment(self, layer, kind):
        if self.plan is None:
            return FULL
        return self.plan.treatment_for(layer, kind)

    def scale_for(self, layer, kind, bits):
        if self.static_scales is None:
            return None
        site = Site(layer, kind)
        if site not in self.static_scales:
            raise PlanError(f"No static scale was calibrated for {site}")
        scale = self.static_scales[site]
        if bits != self.scale_bits:
            scale = rescale(scale, self.scale_bits, bits)
        return scale


class Linear(Module):
    """A bias-free full-precision projection `y = x W^T` with `W` stored as (out x in)."""

    def __init__(self, in_features, out_features):
        super().__init__()
        self.register_buffer("weight", torch.zeros(out_features, in_features))

    def forward(self, x, context=None):
        return matmul(x, self.weight.t())


class QuantLinear(Linear):
    """
    A projection of decoder layer `layer` whose input activation (and weight) are treated
    according to the run's precision plan.
    """

    def __init__(self, in_features, out_features, layer, kind):
        super().__init__(in_features, out_features)
        self.layer = layer
        self.kind = kind

    @cached(name="treated_weight")
    def treated_weight(self, treatment, weight_bits):
        return treatment.apply_weight(self.weight, weight_bits=weight_bits)

    def forward(self, x, context):
        context.emit(self.layer, self.kind, "input", x)
        treatment = context.treatment(self.layer, self.kind)
        weight = self.weight
        if treatment != FULL:
            plan = context.plan
            scale = context.scale_for(self.layer, self.kind, treatment.bits) if treatment.is_integer else None
            x = treatment.apply_activation(
                x, granularity=plan.granularity, scale=scale, exclude_token=context.exclude_token
            )
            if treatment.is_integer:
                weight = self.treated_weight(treatment, plan.weight_bits)
            elif plan.apply_high_to_weights:
                weight = self.treated_weight(treatment, None)
        res = matmul(x, weight.t())
        context.emit(self.layer, self.kind, "output", res)
        return res


class RMSNorm(Module):
    def __init__(self, d_model, eps, layer=None, kind=None):
        super().__init__()
        self.eps = eps
        self.layer = layer
        self.kind = kind
        self.register_buffer("gamma", torch.ones(d_model))

    def forward(self, x, context=None):
        tapped = context is not None and self.layer is not None
        if tapped:
            context.emit(self.layer, self.kind, "input", x)
        res = rms_norm(x, self.gamma, eps=self.eps)
        if tapped:
            context.emit(self.layer, self.kind, "output", res)
        return res


class Attention(Module):
    """Causal multi-head self-attention with rotary embeddings. Scores and softmax stay full precision."""

    def __init__(self, config, layer):
        super().__init__()
        self.n_heads = config.n_heads
        self.head_dim = config.head_dim
        self.rope_base = config.rope_base
        for kind in ("q", "k", "v", "out"):
            setattr(self, kind, QuantLinear(config.d_model, config.d_model, layer, kind))

    def forward(self, x, context):
        seq_len = x.size(0)
        q = rope_rotate(self.q(x, context).view(seq_len, self.n_heads, self.head_dim), base=self.rope_base)
        k = rope_rotate(self.k(x, context).view(seq_len, self.n_heads, self.head_dim), base=self.rope_base)
        v = self.v(x, context).view(seq_len, self.n_heads, self.head_dim)

        causal_mask = torch.ones(seq_len, seq_len, dtype=torch.bool).tril()
        scale = 1.0 / math.sqrt(self.head_dim)
        heads = []
        for h in range(self.n_heads):
            scores = matmul(q[:, h], k[:, h].t()) * scale
            probs = softmax_rows(scores, mask=causal_mask)
            heads.append(matmul(probs, v[:, h]))
        return self.out(torch.cat(heads, dim=-1), context)


class GatedMLP(Module):
    def __init__(self, config, layer):
        super().__init__()
        self.gate = QuantLinear(config.d_model, config.d_ff, layer, "gate")
        self.up = QuantLinear(config.d_model, config.d_ff, layer, "up")
        self.down = QuantLinear(config.d_ff, config.d_model, layer, "down")

    def forward(self, x, context):
        hidden = silu(self.gate(x, context)) * self.up(x, context)
        return self.down(hidden, context)


class DecoderLayer(Module):
    def __init__(self, config, layer):
        super().__init__()
        self.rmsnorm_in = RMSNorm(config.d_model, config.rms_eps, layer, "rmsnorm_in")
        self.attn = Attention(config, layer)
        self.rmsnorm_post = RMSNorm(config.d_model, config.rms_eps, layer, "rmsnorm_post")
        self.mlp = GatedMLP(config, layer)

    def forward(self, x, context):
        h = x + self.attn(self.rmsnorm_in(x, context), context)
        return h + self.mlp(self.rmsnorm_post(h, context), context)


class LlamaDecoder(Module):
    """
    The full decoder: token embedding, `n_layers` pre-norm blocks, final RMSNorm and LM head.
    The embedding, final norm and LM head are never quantized.

    Weights are buffers, named after the module tree (`layers.0.attn.q.weight` holds the query
    projection of layer 1).
    """

    def __init__(self, config):
        super().__init__()
        self.config = config
        self.register_buffer("embedding", torch.zeros(config.vocab_size, config.d_model))
        self.layers = nn.ModuleList([DecoderLayer(config, layer) for layer in range(1, config.n_layers + 1)])
        self.final_norm = RMSNorm(config.d_model, config.rms_eps)
        self.lm_head = Linear(config.d_model, config.vocab_size)

    def forward(self, tokens, context):
        x = self.embedding[tokens]
        for layer in self.layers:
            x = layer(x, context)
        return self.lm_head(self.final_norm(x))
