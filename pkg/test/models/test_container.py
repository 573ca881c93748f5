#!/usr/bin/env python3

import struct
import unittest
from collections import OrderedDict

import torch

from spikequant.models import (
    SpikeInjectionSpec,
    bundle_from_bytes,
    bundle_to_bytes,
    decode_tensors,
    encode_tensors,
    load_bundle,
    save_bundle,
)
from spikequant.models.container import CONFIG_NAME, MAGIC
from spikequant.sites import Site
from spikequant.test.base_test_case import BaseTestCase
from spikequant.test.utils import tiny_model
from spikequant.utils.errors import FormatError


class TestTensorCodec(BaseTestCase, unittest.TestCase):
    seed = 0

    def test_layout(self):
        data = encode_tensors(OrderedDict([("ab", torch.tensor([[1.0, -2.0]]))]))
        expected = (
            MAGIC
            + struct.pack("<II", 1, 1)
            + struct.pack("<I", 2)
            + b"ab"
            + struct.pack("<BB", 0, 2)
            + struct.pack("<2Q", 1, 2)
            + struct.pack("<2f", 1.0, -2.0)
        )
        self.assertEqual(data, expected)

    def test_round_trip(self):
        tensors = OrderedDict(
            [("a", torch.randn(3, 4)), ("scalar", torch.tensor(2.5)), ("text", b"{}"), ("empty", torch.zeros(0, 5))]
        )
        decoded = decode_tensors(encode_tensors(tensors))
        self.assertEqual(list(decoded), list(tensors))
        self.assertBitEqual(decoded["a"], tensors["a"])
        self.assertEqual(decoded["scalar"].shape, ())
        self.assertEqual(decoded["text"], b"{}")
        self.assertEqual(decoded["empty"].shape, (0, 5))

    def test_corrupt(self):
        data = encode_tensors(OrderedDict([("a", torch.ones(2))]))
        with self.assertRaises(FormatError):
            decode_tensors(b"XXXX" + data[4:])
        with self.assertRaises(FormatError):
            decode_tensors(data[:4] + struct.pack("<I", 2) + data[8:])
        with self.assertRaises(FormatError):
            decode_tensors(data[:-1])
        with self.assertRaises(FormatError):
            decode_tensors(data + b"\x00")
        with self.assertRaises(FormatError):
            decode_tensors(b"")

    def test_duplicate_name(self):
        one = encode_tensors(OrderedDict([("a", torch.ones(1))]))
        record = one[12:]
        data = MAGIC + struct.pack("<II", 1, 2) + record + record
        with self.assertRaises(FormatError):
            decode_tensors(data)

    def test_unknown_dtype(self):
        data = bytearray(encode_tensors(OrderedDict([("a", torch.ones(1))])))
        # magic, version, count, name length, name: the dtype byte follows
        data[4 + 8 + 4 + 1] = 7
        with self.assertRaises(FormatError):
            decode_tensors(bytes(data))


class TestBundleContainer(BaseTestCase, unittest.TestCase):
    def setUp(self):
        super().setUp()
        self.model = tiny_model(seed=5, inject=SpikeInjectionSpec([(1, "down", 2, 50.0)], bot_channel=1))

    def test_round_trip(self):
        loaded = bundle_from_bytes(bundle_to_bytes(self.model))
        self.assertEqual(loaded.config, self.model.config)
        self.assertEqual(loaded.model_id, self.model.model_id)
        self.assertEqual(loaded.injection.to_dict(), self.model.injection.to_dict())
        for name, tensor in self.model.weights.items():
            self.assertBitEqual(loaded.weights[name], tensor)
        self.assertIsNone(loaded.static_scales)

    def test_static_scales(self):
        bundle = self.model.with_static_scales({Site(1, "q"): 0.125, Site(2, "down"): 3.0}, scale_bits=6)
        loaded = bundle_from_bytes(bundle_to_bytes(bundle))
        self.assertEqual(loaded.static_scales, bundle.static_scales)
        self.assertEqual(loaded.scale_bits, 6)

    def test_save_load_reproduces_bytes(self):
        path = self.tmp_path("model.saqt")
        save_bundle(self.model, path)
        with open(path, "rb") as f:
            first = f.read()
        self.assertEqual(first[:4], MAGIC)
        save_bundle(load_bundle(path), path)
        with open(path, "rb") as f:
            self.assertEqual(f.read(), first)

    def test_invalid_contents(self):
        tensors = decode_tensors(bundle_to_bytes(self.model))
        del tensors["lm_head.weight"]
        with self.assertRaises(FormatError):
            bundle_from_bytes(encode_tensors(tensors))
        tensors = decode_tensors(bundle_to_bytes(self.model))
        del tensors[CONFIG_NAME]
        with self.assertRaises(FormatError):
            bundle_from_bytes(encode_tensors(tensors))
        tensors = decode_tensors(bundle_to_bytes(self.model))
        tensors[CONFIG_NAME] = b"{\"config\": 1}"
        with self.assertRaises(FormatError):
            bundle_from_bytes(encode_tensors(tensors))

    def test_missing_file(self):
        with self.assertRaises(OSError):
            load_bundle(self.tmp_path("absent.saqt"))


if __name__ == "__main__":
    unittest.main()
