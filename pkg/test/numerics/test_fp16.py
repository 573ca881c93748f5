#!/usr/bin/env python3

import unittest

import torch

from spikequant.numerics import FP16_MAX, fp16_round_tensor
from spikequant.test.base_test_case import BaseTestCase
from spikequant.utils.errors import NonFiniteError


class TestFp16Round(BaseTestCase, unittest.TestCase):
    seed = 0

    def test_representable_values_unchanged(self):
        x = torch.tensor([0.0, 1.0, -2.5, 1024.0, FP16_MAX, -FP16_MAX])
        self.assertBitEqual(fp16_round_tensor(x), x)

    def test_rounds_to_nearest_even(self):
        # 2049 lies halfway between 2048 and 2050 (spacing 2): ties go to the even mantissa, 2048
        self.assertEqual(float(fp16_round_tensor(torch.tensor([2049.0]))[0]), 2048.0)
        self.assertEqual(float(fp16_round_tensor(torch.tensor([2051.0]))[0]), 2052.0)

    def test_returns_float32(self):
        res = fp16_round_tensor(torch.randn(10))
        self.assertEqual(res.dtype, torch.float32)

    def test_idempotent(self):
        x = torch.randn(100) * 1000
        once = fp16_round_tensor(x)
        self.assertBitEqual(fp16_round_tensor(once), once)

    def test_relative_error(self):
        x = torch.rand(500) * 1000 + 1
        rel = ((fp16_round_tensor(x) - x).abs() / x).max()
        self.assertLessEqual(float(rel), 2.0 ** -11)

    def test_overflow(self):
        with self.assertRaises(NonFiniteError):
            fp16_round_tensor(torch.tensor([1.0, 70000.0]))


if __name__ == "__main__":
    unittest.main()
