#!/usr/bin/env python3

from .bundle import ModelBundle, weight_name, weight_shapes
from .config import ModelConfig
from .container import bundle_from_bytes, bundle_to_bytes, decode_tensors, encode_tensors, load_bundle, save_bundle
from .decoder import Attention, DecoderLayer, GatedMLP, LlamaDecoder, Linear, QuantLinear, RMSNorm, RunContext
from .evaluation import as_token_tensor, forward, logit_errors, perplexity, perplexity_from_logits, quant_error
from .synth import (
    BOT_TOKEN,
    PRESETS,
    RESIDUAL_KINDS,
    SpikeInjection,
    SpikeInjectionSpec,
    bot_spike,
    llama_like,
    mistral_like,
    planted_unit,
    synth_model,
)

__all__ = [
    "Attention",
    "BOT_TOKEN",
    "DecoderLayer",
    "GatedMLP",
    "Linear",
    "LlamaDecoder",
    "ModelBundle",
    "ModelConfig",
    "PRESETS",
    "QuantLinear",
    "RESIDUAL_KINDS",
    "RMSNorm",
    "RunContext",
    "SpikeInjection",
    "SpikeInjectionSpec",
    "as_token_tensor",
    "bot_spike",
    "bundle_from_bytes",
    "bundle_to_bytes",
    "decode_tensors",
    "encode_tensors",
    "forward",
    "llama_like",
    "load_bundle",
    "logit_errors",
    "mistral_like",
    "perplexity",
    "perplexity_from_logits",
    "planted_unit",
    "quant_error",
    "save_bundle",
    "synth_model",
    "weight_name",
    "weight_shapes",
]
