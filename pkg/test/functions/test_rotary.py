#!/usr/bin/env python3

import unittest

import torch

from spikequant.functions import rope_rotate
from spikequant.test.base_test_case import BaseTestCase
from spikequant.utils.errors import ShapeError


class TestRopeRotate(BaseTestCase, unittest.TestCase):
    seed = 0

    def test_position_zero_unchanged(self):
        x = torch.randn(5, 2, 8)
        self.assertBitEqual(rope_rotate(x)[0], x[0])

    def test_preserves_pair_norms(self):
        x = torch.randn(7, 3, 4)
        res = rope_rotate(x, base=10000.0)
        pair_norm = x.view(7, 3, 2, 2).norm(dim=-1)
        self.assertAllClose(res.view(7, 3, 2, 2).norm(dim=-1), pair_norm, rtol=1e-5, atol=1e-6)

    def test_rotation_angle(self):
        # The first pair rotates by exactly `pos` radians
        x = torch.zeros(3, 1, 2)
        x[..., 0] = 1.0
        res = rope_rotate(x, base=10000.0)
        pos = torch.arange(3, dtype=torch.float64)
        self.assertAllClose(res[:, 0, 0], pos.cos().float(), rtol=1e-6, atol=1e-7)
        self.assertAllClose(res[:, 0, 1], pos.sin().float(), rtol=1e-6, atol=1e-7)

    def test_relative_positions(self):
        # <rope(q)_m, rope(k)_n> depends on m - n only
        q = torch.randn(1, 1, 8).expand(6, 1, 8).contiguous()
        k = torch.randn(1, 1, 8).expand(6, 1, 8).contiguous()
        rq, rk = rope_rotate(q), rope_rotate(k)
        self.assertAlmostEqual(float((rq[3] * rk[1]).sum()), float((rq[5] * rk[3]).sum()), places=4)

    def test_shape_errors(self):
        with self.assertRaises(ShapeError):
            rope_rotate(torch.randn(4, 3))
        with self.assertRaises(ShapeError):
            rope_rotate(torch.randn(4, 1, 3))
        with self.assertRaises(ValueError):
            rope_rotate(torch.randn(4, 1, 2), base=0.0)


if __name__ == "__main__":
    unittest.main()
