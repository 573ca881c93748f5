#!/usr/bin/env python3

import torch
from torch import nn

from . import settings
from .utils.errors import ConfigError, ShapeError, check_finite


class Module(nn.Module):
    """
    Base class of the decoder blocks. Calling a module runs :meth:`forward` directly (there are no
    torch hooks, so modules can be shared by concurrent evaluations) and validates the outputs:
    they must be tensors, and, while :class:`spikequant.settings.debug` is on, finite.
    """

    def __call__(self, *inputs, **kwargs):
        outputs = self.forward(*inputs, **kwargs)
        return _validate_module_outputs(outputs, type(self).__name__)

    def _get_module_and_name(self, parameter_name):
        """Get the module owning a weight, and the weight name, from a full weight name."""
        module, name = parameter_name.rsplit(".", 1)
        try:
            return self.get_submodule(module), name
        except AttributeError:
            raise ConfigError(
                "Invalid weight name {}. {} has no module {}".format(parameter_name, type(self).__name__, module)
            )

    def forward(self, *inputs, **kwargs):
        raise NotImplementedError

    def initialize(self, **kwargs):
        """
        Set the value of weights (buffers).

        kwargs: (name, value) - weight to initialize.
        Can also initialize recursively by passing in the full name of a
        weight. For example a decoder can be loaded with
        `decoder.initialize(**{'layers.0.attn.q.weight': w})`
        or
        `decoder.layers[0].attn.q.initialize(weight=w)`.

        Value must be a tensor of the registered shape.
        """
        for name, val in kwargs.items():
            if "." in name:
                module, name = self._get_module_and_name(name)
                module.initialize(**{name: val})
            elif name not in self._buffers:
                raise ConfigError("Unknown weight {w} for {c}".format(w=name, c=self.__class__.__name__))
            else:
                val = torch.as_tensor(val, dtype=torch.float32)
                current = self._buffers[name]
                if val.shape != current.shape:
                    raise ShapeError(
                        f"Weight {name} of {self.__class__.__name__} has shape {tuple(current.shape)}, "
                        f"got {tuple(val.shape)}"
                    )
                check_finite(val, name)
                current.copy_(val)
                if hasattr(self, "_memoize_cache"):
                    self._memoize_cache.clear()
        return self

    def named_weights(self):
        """Every weight of the module tree, by dotted name."""
        return self.named_buffers()


def _validate_module_outputs(outputs, name):
    if isinstance(outputs, tuple):
        if not all(torch.is_tensor(output) for output in outputs):
            raise RuntimeError(
                "All outputs must be torch.Tensors. Got {}".format([output.__class__.__name__ for output in outputs])
            )
        if settings.debug.on():
            for output in outputs:
                check_finite(output, f"{name} output")
        if len(outputs) == 1:
            outputs = outputs[0]
        return outputs
    elif torch.is_tensor(outputs):
        if settings.debug.on():
            check_finite(outputs, f"{name} output")
        return outputs
    else:
        raise RuntimeError("Output must be a torch.Tensor. Got {}".format(outputs.__class__.__name__))
