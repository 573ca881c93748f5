#!/usr/bin/env python3

import unittest

import torch
from hypothesis import given, settings, strategies as st

import spikequant
from spikequant.functions import matmul
from spikequant.test.base_test_case import BaseTestCase
from spikequant.test.utils import loop_matmul
from spikequant.utils.errors import NonFiniteError, ShapeError


class TestMatmul(BaseTestCase, unittest.TestCase):
    seed = 0

    def test_matches_triple_loop_exactly(self):
        a = torch.randn(5, 7)
        b = torch.randn(7, 3)
        self.assertBitEqual(matmul(a, b), loop_matmul(a, b))

    def test_close_to_torch(self):
        a = torch.randn(9, 33)
        b = torch.randn(33, 4)
        self.assertAllClose(matmul(a, b), a.matmul(b))

    def test_fast_matmul_delegates(self):
        a = torch.randn(4, 6)
        b = torch.randn(6, 2)
        with spikequant.settings.fast_matmul():
            res = matmul(a, b)
        self.assertBitEqual(res, torch.matmul(a, b))

    def test_reproducible(self):
        a = torch.randn(16, 64)
        b = torch.randn(64, 16)
        self.assertBitEqual(matmul(a, b), matmul(a.clone(), b.clone()))

    def test_empty_inner_dimension(self):
        res = matmul(torch.zeros(3, 0), torch.zeros(0, 2))
        self.assertBitEqual(res, torch.zeros(3, 2))

    def test_shape_errors(self):
        with self.assertRaises(ShapeError):
            matmul(torch.randn(3, 4), torch.randn(5, 2))
        with self.assertRaises(ShapeError):
            matmul(torch.randn(3), torch.randn(3, 2))

    def test_non_finite_input(self):
        a = torch.randn(2, 2)
        a[0, 1] = float("nan")
        with self.assertRaises(NonFiniteError):
            matmul(a, torch.randn(2, 2))
        with spikequant.settings.debug(False):
            self.assertTrue(bool(matmul(a, torch.ones(2, 2))[0].isnan().all()))

    @given(
        m=st.integers(1, 4),
        k=st.integers(1, 6),
        n=st.integers(1, 4),
        seed=st.integers(0, 2 ** 16),
    )
    @settings(max_examples=25, deadline=None)
    def test_triple_loop_property(self, m, k, n, seed):
        generator = torch.Generator().manual_seed(seed)
        a = torch.randn(m, k, generator=generator) * 100
        b = torch.randn(k, n, generator=generator)
        self.assertBitEqual(matmul(a, b), loop_matmul(a, b))


if __name__ == "__main__":
    unittest.main()
