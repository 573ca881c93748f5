#!/usr/bin/env python3

import logging
import math
from collections import OrderedDict, namedtuple

import torch

from ..data.streams import BOT_TOKEN
from ..sites import LINEAR_KINDS, SITE_KINDS
from ..utils.errors import ConfigError
from ..utils.random import make_generator
from .bundle import ModelBundle, weight_name, weight_shapes
from .config import ModelConfig

logger = logging.getLogger(__name__)

#: Projections whose output is added to the residual stream
RESIDUAL_KINDS = ("down", "out")
#: Weight with which a planted unit reads the trigger channel
TRIGGER_GAIN = 1.25
#: Value of the trigger channel in the beginning-of-text embedding when no BOT spike is requested
TRIGGER_MARKER = 50.0


class SpikeInjection(namedtuple("SpikeInjection", ["layer", "kind", "channel", "scale"])):
    """
    Spike output channel `channel` of site `kind` in layer `layer` (1-based) to about `scale` times the
    typical activation.

    Down and out projections write the residual stream. For them the injection plants a hidden unit that
    reads the trigger channel of the beginning-of-text embedding, so the spike is computed by the forward
    pass and fires on that token only. For any other projection row `channel` of the weight is multiplied
    by `scale`; for a norm, the gain of `channel`.
    """

    __slots__ = ()

    def __new__(cls, layer, kind, channel, scale):
        if isinstance(layer, bool) or not isinstance(layer, int) or layer < 1:
            raise ConfigError(f"Injection layers are numbered from 1, got {layer!r}")
        if kind not in SITE_KINDS:
            raise ConfigError(f"Cannot inject into {kind!r}. Expected one of {SITE_KINDS}")
        if isinstance(channel, bool) or not isinstance(channel, int) or channel < 0:
            raise ConfigError(f"Injection channel must be a non-negative integer, got {channel!r}")
        scale = float(scale)
        if not math.isfinite(scale) or scale <= 0:
            raise ConfigError(f"Injection scale must be positive, got {scale}")
        return super(SpikeInjection, cls).__new__(cls, layer, kind, channel, scale)

    @classmethod
    def parse(cls, text):
        """Parse `"layer=2,kind=down,channel=5,scale=300"`."""
        try:
            fields = dict(item.split("=", 1) for item in text.replace(" ", "").split(","))
            layer, kind = int(fields["layer"]), fields["kind"]
            channel, scale = int(fields["channel"]), float(fields["scale"])
        except (KeyError, ValueError):
            raise ConfigError(f"Cannot parse injection {text!r}: expected layer=L,kind=K,channel=C,scale=S")
        return cls(layer, kind, channel, scale)

    def __str__(self):
        return f"layer={self.layer},kind={self.kind},channel={self.channel},scale={self.scale:g}"


class SpikeInjectionSpec(object):
    """
    How to spike a synthetic model: a list of :class:`SpikeInjection` and an optional
    beginning-of-text spike (channel `bot_channel` of the BOT token embedding set to `bot_scale`).
    """

    def __init__(self, injections=(), bot_channel=None, bot_scale=100.0):
        self.injections = tuple(
            injection if isinstance(injection, SpikeInjection) else SpikeInjection(*injection)
            for injection in injections
        )
        if bot_channel is not None and (isinstance(bot_channel, bool) or not isinstance(bot_channel, int)):
            raise ConfigError(f"bot_channel must be an integer, got {bot_channel!r}")
        if bot_channel is not None and bot_channel < 0:
            raise ConfigError(f"bot_channel must be non-negative, got {bot_channel}")
        if not math.isfinite(bot_scale):
            raise ConfigError(f"bot_scale must be finite, got {bot_scale}")
        self.bot_channel = bot_channel
        self.bot_scale = float(bot_scale)

    @property
    def is_empty(self):
        return not self.injections and self.bot_channel is None

    @property
    def planted(self):
        """The injections into residual-writing projections, which are triggered by the BOT token."""
        return tuple(injection for injection in self.injections if injection.kind in RESIDUAL_KINDS)

    @property
    def trigger_channel(self):
        """
        The embedding channel that marks the beginning-of-text token: `bot_channel` if set, else the channel
        of the first planted injection. None when nothing needs a trigger.
        """
        if self.bot_channel is not None:
            return self.bot_channel
        planted = self.planted
        return planted[0].channel if planted else None

    @property
    def trigger_value(self):
        return self.bot_scale if self.bot_channel is not None else TRIGGER_MARKER

    def validate(self, config):
        units = set()
        for injection in self.injections:
            if injection.layer > config.n_layers:
                raise ConfigError(f"Cannot inject into layer {injection.layer} of a {config.n_layers}-layer model")
            width = config.projection_shape(injection.kind)[0] if injection.kind in LINEAR_KINDS else config.d_model
            if injection.channel >= width:
                raise ConfigError(f"Channel {injection.channel} is out of range for {injection.kind} (width {width})")
            if injection.kind in RESIDUAL_KINDS:
                unit = (injection.layer, injection.kind, planted_unit(injection, config))
                if unit in units:
                    raise ConfigError(f"Injection {injection} reuses the hidden unit of another injection")
                units.add(unit)
        if self.bot_channel is not None and self.bot_channel >= config.d_model:
            raise ConfigError(f"bot_channel {self.bot_channel} is out of range for d_model={config.d_model}")
        return self

    def to_dict(self):
        return OrderedDict(
            [
                ("injections", [OrderedDict(injection._asdict()) for injection in self.injections]),
                ("bot_channel", self.bot_channel),
                ("bot_scale", self.bot_scale),
            ]
        )

    @classmethod
    def from_dict(cls, d):
        injections = [
            SpikeInjection(int(i["layer"]), i["kind"], int(i["channel"]), i["scale"]) for i in d["injections"]
        ]
        return cls(injections, bot_channel=d.get("bot_channel"), bot_scale=d.get("bot_scale", 100.0))

    def __repr__(self):
        return f"SpikeInjectionSpec({[str(i) for i in self.injections]}, bot_channel={self.bot_channel})"


def planted_unit(injection, config):
    """Index of the hidden unit (down) or attention value channel (out) that carries a planted spike."""
    if injection.kind == "down":
        return injection.channel % config.d_ff
    return injection.channel


def _plant(weights, injection, config, trigger):
    r"""
    Wire a unit that reads channel `trigger` of the normalized residual to output channel `injection.channel`.

    On the beginning-of-text token the normalized residual is close to :math:`\sqrt{d} e_{trigger}`, so the
    unit's output there is about `injection.scale`. Elsewhere the trigger channel is of order 1 and the unit
    stays small.
    """
    gain, unit, channel = TRIGGER_GAIN, planted_unit(injection, config), injection.channel
    peak = gain * math.sqrt(config.d_model)
    if injection.kind == "down":
        for kind in ("gate", "up"):
            rows = weights[weight_name(injection.layer, kind)]
            rows[unit].zero_()
            rows[unit, trigger] = gain
        # silu(z) * z at the peak
        response = peak * peak / (1.0 + math.exp(-peak))
    else:
        values = weights[weight_name(injection.layer, "v")]
        values[unit].zero_()
        values[unit, trigger] = gain
        response = peak
    columns = weights[weight_name(injection.layer, injection.kind)]
    columns[:, unit].zero_()
    columns[channel, unit] = injection.scale / response


def llama_like(n_layers, scale=300.0, channel=5):
    """Spikes born in the down projections of the second and the last layer."""
    return SpikeInjectionSpec([(2, "down", channel, scale), (n_layers, "down", channel, scale)])


def mistral_like(n_layers, scale=300.0, channels=(5, 17, 29)):
    """
    Spikes spread across several channels: down projections of layers 2, n-1 and n, and the out
    projection of layer n.
    """
    layers = [(2, "down"), (n_layers - 1, "down"), (n_layers, "down"), (n_layers, "out")]
    return SpikeInjectionSpec(
        [(layer, kind, channels[i % len(channels)], scale) for i, (layer, kind) in enumerate(layers)]
    )


def bot_spike(channel=5, scale=100.0):
    """Only the beginning-of-text token carries a spike."""
    return SpikeInjectionSpec(bot_channel=channel, bot_scale=scale)


PRESETS = OrderedDict([("llama_like", llama_like), ("mistral_like", mistral_like)])


def synth_model(config=None, inject=None, seed=0, model_id=None):
    r"""
    Build a synthetic decoder with reproducible random weights, optionally spiked.

    Projection weights are drawn i.i.d. from :math:`U(-\sqrt{3 / n_{in}}, \sqrt{3 / n_{in}})`
    (zero mean, variance :math:`1 / n_{in}`), so activations stay of order 1 through the network.
    The embedding is standard normal and every RMSNorm gain is 1. Draws come from a single
    generator seeded with `seed`, in the canonical weight order.

    Injections into down and out projections then plant a unit triggered by the beginning-of-text token
    (see :class:`SpikeInjection`); other injections multiply weight rows or norm gains. Either way spikes
    arise from the forward computation and propagate through the residual stream on their own.

    Args:
        :attr:`config` (:class:`ModelConfig`, optional): Default: `ModelConfig()`
        :attr:`inject` (:class:`SpikeInjectionSpec`, optional)
        :attr:`seed` (int): Default: 0
        :attr:`model_id` (str, optional)

    Returns:
        :class:`ModelBundle`
    """
    config = config if config is not None else ModelConfig()
    inject = inject if inject is not None else SpikeInjectionSpec()
    inject.validate(config)
    generator = make_generator(seed)

    weights = OrderedDict()
    for name, shape in weight_shapes(config).items():
        if name == "embedding":
            weights[name] = torch.randn(*shape, generator=generator)
        elif name.endswith(".gamma"):
            weights[name] = torch.ones(*shape)
        else:
            bound = math.sqrt(3.0 / shape[1])
            weights[name] = (torch.rand(*shape, generator=generator) * 2 - 1) * bound

    trigger = inject.trigger_channel
    for injection in inject.injections:
        if injection.kind in RESIDUAL_KINDS:
            _plant(weights, injection, config, trigger)
        else:
            weights[weight_name(injection.layer, injection.kind)][injection.channel] *= injection.scale
        logger.debug(f"Injected spike {injection}")
    if trigger is not None:
        weights["embedding"][BOT_TOKEN, trigger] = inject.trigger_value

    if model_id is None:
        model_id = f"synth-{config.n_layers}x{config.d_model}-seed{seed}" + ("" if inject.is_empty else "-spiked")
    logger.info(f"Synthesized {model_id} ({len(inject.injections)} injection(s))")
    return ModelBundle(config, weights, model_id=model_id, injection=inject)
