#!/usr/bin/env python3


class _feature_flag(object):
    _state = False

    @classmethod
    def on(cls):
        return cls._state

    @classmethod
    def off(cls):
        return (not cls._state)

    @classmethod
    def _set_state(cls, state):
        cls._state = state

    def __init__(self, state=True):
        self.prev = self.__class__.on()
        self.state = state

    def __enter__(self):
        self.__class__._set_state(self.state)

    def __exit__(self, *args):
        self.__class__._set_state(self.prev)
        return False


class _value_context(object):
    _global_value = None

    @classmethod
    def value(cls):
        return cls._global_value

    @classmethod
    def _set_value(cls, value):
        cls._global_value = value

    def __init__(self, value):
        self._orig_value = self.__class__.value()
        self._instance_value = value

    def __enter__(self,):
        self.__class__._set_value(self._instance_value)

    def __exit__(self, *args):
        self.__class__._set_value(self._orig_value)
        return False


class debug(_feature_flag):
    """
    Whether or not to perform "safety" checks on the supplied data.
    When on, every public tensor operation verifies that its inputs are finite, and every
    :class:`spikequant.Module` verifies that its outputs are finite.
    Pros: non-finite values are caught where they appear, not several layers later
    Cons: one extra reduction per operation
    """

    _state = True


class fast_matmul(_feature_flag):
    """
    If set to True, :func:`spikequant.functions.matmul` delegates to :func:`torch.matmul`.
    This is much faster, but the summation order over the inner dimension is whatever the
    BLAS backend picks, so results are no longer bit-reproducible across machines.

    If set to False (default), products are accumulated left-to-right over the inner dimension.
    """

    _state = False


class quantize_high_weights(_feature_flag):
    """
    Whether "high precision" treatments (FP16, FP8) round the projection weight as well as
    its input activation. Integer treatments always quantize both operands (W8A8-style).
    Default: False
    """

    _state = False


class rms_eps(_value_context):
    """
    The epsilon added to the mean square in RMS normalization.
    Default: 1e-5
    """

    _global_value = 1e-5


class rope_base(_value_context):
    """
    The base of the rotary positional embedding frequencies.
    Default: 10000
    """

    _global_value = 10000.0


class max_context(_value_context):
    """
    The default maximum number of tokens a decoder accepts in one forward pass.
    Default: 2048
    """

    _global_value = 2048


class spike_threshold(_value_context):
    """
    Activation magnitude above which a site is considered to carry a spike. Used by
    :func:`spikequant.profiling.detect_threshold` and
    :func:`spikequant.planning.build_targeted_plan` when no threshold is given.
    Default: 100
    """

    _global_value = 100.0


class sigma_multiplier(_value_context):
    """
    Number of standard deviations from the mean beyond which a value is an outlier
    (:func:`spikequant.profiling.detect_sigma`).
    Default: 6
    """

    _global_value = 6.0


class order_of_magnitude_factor(_value_context):
    """
    A value is a spike under the order-of-magnitude definition when its magnitude is at least
    this factor times the mean absolute value of its tensor.
    Default: 10
    """

    _global_value = 10.0


class llmint8_magnitude(_value_context):
    """
    Minimum feature magnitude for the LLM.int8() outlier criterion.
    Default: 6.0
    """

    _global_value = 6.0


class llmint8_layer_fraction(_value_context):
    """
    Minimum fraction of layers an LLM.int8() outlier dimension must affect.
    Default: 0.25
    """

    _global_value = 0.25


class llmint8_token_fraction(_value_context):
    """
    Minimum fraction of sequence positions an LLM.int8() outlier dimension must affect.
    Default: 0.06
    """

    _global_value = 0.06


__all__ = [
    "debug",
    "fast_matmul",
    "llmint8_layer_fraction",
    "llmint8_magnitude",
    "llmint8_token_fraction",
    "max_context",
    "order_of_magnitude_factor",
    "quantize_high_weights",
    "rms_eps",
    "rope_base",
    "sigma_multiplier",
    "spike_threshold",
]
