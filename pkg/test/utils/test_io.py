#!/usr/bin/env python3

import os
import unittest
from collections import OrderedDict

from spikequant.test.base_test_case import BaseTestCase
from spikequant.utils.errors import FormatError
from spikequant.utils.io import atomic_write, dumps_json, read_json, write_json


class TestIO(BaseTestCase, unittest.TestCase):
    def test_atomic_write_creates_directories(self):
        path = self.tmp_path(os.path.join("a", "b", "out.bin"))
        atomic_write(path, b"\x00\x01")
        with open(path, "rb") as f:
            self.assertEqual(f.read(), b"\x00\x01")
        self.assertEqual(os.listdir(os.path.dirname(path)), ["out.bin"])

    def test_atomic_write_replaces(self):
        path = self.tmp_path("out.txt")
        atomic_write(path, "first")
        atomic_write(path, "second")
        with open(path) as f:
            self.assertEqual(f.read(), "second")

    def test_dumps_json_is_stable(self):
        obj = OrderedDict([("b", 1), ("a", [1.5, None])])
        self.assertEqual(dumps_json(obj), '{\n  "b": 1,\n  "a": [\n    1.5,\n    null\n  ]\n}\n')
        with self.assertRaises(ValueError):
            dumps_json({"x": float("nan")})

    def test_schema_version(self):
        path = self.tmp_path("x.json")
        write_json(path, {"schema_version": 1, "value": 3})
        self.assertEqual(read_json(path, schema_version=1)["value"], 3)
        with self.assertRaises(FormatError):
            read_json(path, schema_version=2)
        write_json(path, [1, 2])
        with self.assertRaises(FormatError):
            read_json(path, schema_version=1)
        self.assertEqual(read_json(path), [1, 2])


if __name__ == "__main__":
    unittest.main()
