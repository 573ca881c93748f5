#!/usr/bin/env python3

import json
import logging
import struct
from collections import OrderedDict

import torch

from ..sites import Site
from ..utils import prod
from ..utils.errors import FormatError
from ..utils.io import atomic_write
from .bundle import ModelBundle
from .config import ModelConfig
from .synth import SpikeInjectionSpec

logger = logging.getLogger(__name__)

MAGIC = b"SAQT"
FORMAT_VERSION = 1
DTYPE_F32 = 0
DTYPE_U8 = 1

CONFIG_NAME = "__config__"
SCALES_NAME = "__static_scales__"


def _text_tensor(obj):
    return json.dumps(obj, separators=(",", ":"), allow_nan=False).encode("utf-8")


def encode_tensors(tensors):
    """
    Serialize an ordered mapping of names to float32 tensors (or bytes, stored as u8 vectors)::

        magic "SAQT" | version u32 | count u32 | per tensor:
            name length u32 | UTF-8 name | dtype u8 | rank u8 | dims u64 x rank | payload

    All integers and floats are little-endian.
    """
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(tensors))]
    for name, value in tensors.items():
        encoded_name = name.encode("utf-8")
        if isinstance(value, bytes):
            dtype, dims, payload = DTYPE_U8, (len(value),), value
        else:
            value = torch.as_tensor(value, dtype=torch.float32)
            dims = tuple(value.shape)
            flat = value.reshape(-1).tolist()
            dtype, payload = DTYPE_F32, struct.pack(f"<{len(flat)}f", *flat)
        chunks.append(struct.pack("<I", len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(struct.pack("<BB", dtype, len(dims)))
        chunks.append(struct.pack(f"<{len(dims)}Q", *dims))
        chunks.append(payload)
    return b"".join(chunks)


class _Reader(object):
    def __init__(self, data):
        self.data = data
        self.offset = 0

    def take(self, n):
        if self.offset + n > len(self.data):
            raise FormatError(f"Truncated container: needed {n} bytes at offset {self.offset}")
        res = self.data[self.offset : self.offset + n]
        self.offset += n
        return res

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_tensors(data):
    """Inverse of :func:`encode_tensors`. Raises a :class:`spikequant.utils.errors.FormatError`."""
    reader = _Reader(data)
    if reader.take(4) != MAGIC:
        raise FormatError("Not a SAQT container (bad magic bytes)")
    version, count = reader.unpack("<II")
    if version != FORMAT_VERSION:
        raise FormatError(f"Unsupported container version {version}")

    tensors = OrderedDict()
    for _ in range(count):
        (name_length,) = reader.unpack("<I")
        try:
            name = reader.take(name_length).decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("Tensor name is not valid UTF-8")
        if name in tensors:
            raise FormatError(f"Tensor {name!r} appears twice")
        dtype, rank = reader.unpack("<BB")
        dims = reader.unpack(f"<{rank}Q")
        numel = prod(dims)
        if dtype == DTYPE_U8:
            tensors[name] = bytes(reader.take(numel))
        elif dtype == DTYPE_F32:
            values = reader.unpack(f"<{numel}f")
            tensors[name] = torch.tensor(values, dtype=torch.float32).reshape(dims)
        else:
            raise FormatError(f"Unknown dtype code {dtype} for tensor {name!r}")
    if reader.offset != len(data):
        raise FormatError(f"{len(data) - reader.offset} trailing bytes after the last tensor")
    return tensors


def bundle_to_bytes(bundle):
    header = OrderedDict(
        [
            ("model_id", bundle.model_id),
            ("config", bundle.config.to_dict()),
            ("injection", bundle.injection.to_dict() if bundle.injection is not None else None),
        ]
    )
    tensors = OrderedDict([(CONFIG_NAME, _text_tensor(header))])
    tensors.update(bundle.weights)
    if bundle.static_scales is not None:
        scales = OrderedDict(
            [
                ("bits", bundle.scale_bits),
                ("scales", [dict(site.to_dict(), scale=scale) for site, scale in bundle.static_scales.items()]),
            ]
        )
        tensors[SCALES_NAME] = _text_tensor(scales)
    return encode_tensors(tensors)


def bundle_from_bytes(data):
    tensors = decode_tensors(data)
    if CONFIG_NAME not in tensors or not isinstance(tensors[CONFIG_NAME], bytes):
        raise FormatError(f"Container has no {CONFIG_NAME} text tensor")
    try:
        header = json.loads(tensors.pop(CONFIG_NAME).decode("utf-8"))
        config = ModelConfig.from_dict(header["config"])
        injection = SpikeInjectionSpec.from_dict(header["injection"]) if header.get("injection") else None
        static_scales, scale_bits = None, 8
        if SCALES_NAME in tensors:
            scales = json.loads(tensors.pop(SCALES_NAME).decode("utf-8"))
            scale_bits = scales["bits"]
            static_scales = OrderedDict((Site.from_dict(entry), entry["scale"]) for entry in scales["scales"])
        return ModelBundle(
            config,
            tensors,
            static_scales=static_scales,
            scale_bits=scale_bits,
            model_id=header.get("model_id"),
            injection=injection,
        )
    except (ValueError, KeyError, TypeError) as e:
        raise FormatError(f"Invalid container contents: {e}")


def save_bundle(bundle, path):
    """Write `bundle` as a SAQT container (atomically). Saving a loaded bundle reproduces the file exactly."""
    data = bundle_to_bytes(bundle)
    atomic_write(path, data)
    logger.info(f"Wrote {bundle.model_id} ({bundle.num_weights()} weights, {len(data)} bytes) to {path}")
    return path


def load_bundle(path):
    with open(path, "rb") as f:
        data = f.read()
    bundle = bundle_from_bytes(data)
    logger.info(f"Loaded {bundle.model_id} from {path}")
    return bundle


__all__ = [
    "bundle_from_bytes",
    "bundle_to_bytes",
    "decode_tensors",
    "encode_tensors",
    "load_bundle",
    "save_bundle",
]
