#!/usr/bin/env python3

from ..numerics import Fp8Format, fp16_round_tensor, fp8_quantize_tensor
from ..quantization import QuantSpec, fake_quantize, fake_quantize_excluding_token, quantize_weights
from ..utils.errors import ConfigError

TREATMENT_KINDS = ("int", "fp8_e5m2", "fp8_e4m3", "fp16", "full")


class Treatment(object):
    """
    The numeric treatment of one linear site: integer fake quantization (`int`, with a bit-width),
    FP8 storage rounding (`fp8_e5m2`, `fp8_e4m3`), FP16 rounding (`fp16`), or none at all (`full`).

    Treatments print and parse as short strings: "int8", "int6", "fp8_e5m2", "fp8_e4m3", "fp16", "full".
    """

    def __init__(self, kind, bits=None):
        if kind not in TREATMENT_KINDS:
            raise ConfigError(f"Unknown treatment {kind!r}. Expected one of {TREATMENT_KINDS}")
        if kind == "int":
            QuantSpec(bits)
        elif bits is not None:
            raise ConfigError(f"Only integer treatments take a bit-width, got {kind} with bits={bits}")
        self.kind = kind
        self.bits = bits

    @classmethod
    def parse(cls, text):
        if isinstance(text, Treatment):
            return text
        key = str(text).strip().lower().replace("-", "_")
        if key.startswith("int") and key[3:].isdigit():
            return cls("int", int(key[3:]))
        if key in ("fp8e5m2", "fp8_e5m2", "e5m2"):
            return cls("fp8_e5m2")
        if key in ("fp8e4m3", "fp8_e4m3", "e4m3"):
            return cls("fp8_e4m3")
        if key in ("fp16", "full"):
            return cls(key)
        raise ConfigError(f"Cannot parse treatment {text!r}")

    @property
    def is_integer(self):
        return self.kind == "int"

    @property
    def fp8_format(self):
        if not self.kind.startswith("fp8"):
            return None
        return Fp8Format.from_name(self.kind)

    def apply_activation(self, x, granularity="per_tensor", scale=None, exclude_token=None):
        """
        Apply the treatment to an input activation (seq x d). `scale` (a static Delta) and
        `exclude_token` only matter for integer treatments.
        """
        if self.kind == "full":
            return x
        if self.kind == "fp16":
            return fp16_round_tensor(x)
        if self.fp8_format is not None:
            return fp8_quantize_tensor(x, self.fp8_format)
        spec = QuantSpec(self.bits, granularity, scale=scale)
        if exclude_token is not None:
            return fake_quantize_excluding_token(x, spec, exclude_token)
        return fake_quantize(x, spec)

    def apply_weight(self, w, weight_bits=None):
        if self.kind == "full":
            return w
        if self.kind == "fp16":
            return fp16_round_tensor(w)
        if self.fp8_format is not None:
            return fp8_quantize_tensor(w, self.fp8_format)
        return quantize_weights(w, weight_bits if weight_bits is not None else self.bits)

    def __str__(self):
        return f"int{self.bits}" if self.kind == "int" else self.kind

    def __repr__(self):
        return f"Treatment({str(self)!r})"

    def __eq__(self, other):
        return isinstance(other, Treatment) and (self.kind, self.bits) == (other.kind, other.bits)

    def __hash__(self):
        return hash((self.kind, self.bits))


FULL = Treatment("full")
