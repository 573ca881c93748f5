#!/usr/bin/env python3

import math
import unittest
import warnings

import torch
from hypothesis import given, settings, strategies as st

from spikequant.numerics import (
    E4M3,
    E5M2,
    Fp8Format,
    SaturationWarning,
    fp8_all_values,
    fp8_decode,
    fp8_decode_tensor,
    fp8_encode,
    fp8_encode_tensor,
    fp8_quantize_tensor,
)
from spikequant.test.base_test_case import BaseTestCase
from spikequant.test.utils import brute_force_fp8
from spikequant.utils.errors import NonFiniteError


class TestFp8Formats(BaseTestCase, unittest.TestCase):
    def test_max_finite(self):
        self.assertEqual(E5M2.max_finite, 57344.0)
        self.assertEqual(E4M3.max_finite, 448.0)

    def test_smallest_values(self):
        self.assertEqual(E5M2.min_subnormal, 2.0 ** -16)
        self.assertEqual(E4M3.min_subnormal, 2.0 ** -9)
        self.assertEqual(E5M2.min_normal, 2.0 ** -14)
        self.assertEqual(E4M3.min_normal, 2.0 ** -6)
        self.assertEqual(fp8_decode(1, E4M3), 2.0 ** -9)

    def test_special_codes(self):
        self.assertEqual(fp8_decode(0x7C, E5M2), math.inf)
        self.assertEqual(fp8_decode(0xFC, E5M2), -math.inf)
        self.assertTrue(math.isnan(fp8_decode(0x7D, E5M2)))
        self.assertTrue(math.isnan(fp8_decode(0x7F, E4M3)))
        self.assertTrue(math.isnan(fp8_decode(0xFF, E4M3)))
        self.assertEqual(fp8_decode(0x7E, E4M3), 448.0)
        self.assertEqual(fp8_decode(0x7B, E5M2), 57344.0)

    def test_finite_counts(self):
        for fmt, n_finite in ((E5M2, 248), (E4M3, 254)):
            values, finite = fp8_all_values(fmt)
            self.assertEqual(values.numel(), 256)
            self.assertEqual(int(finite.sum()), n_finite)

    def test_from_name(self):
        self.assertIs(Fp8Format.from_name("fp8_e5m2"), E5M2)
        self.assertIs(Fp8Format.from_name("E4M3"), E4M3)
        with self.assertRaises(ValueError):
            Fp8Format.from_name("e3m4")

    def test_positive_grid_is_increasing(self):
        for fmt in (E5M2, E4M3):
            grid = fmt.positive_grid()
            self.assertTrue(bool((grid[1:] > grid[:-1]).all()))
            self.assertEqual(float(grid[0]), 0.0)


class TestFp8Codec(BaseTestCase, unittest.TestCase):
    seed = 0

    def test_exhaustive_round_trip(self):
        for fmt in (E5M2, E4M3):
            values, finite = fp8_all_values(fmt)
            codes = torch.arange(256)[finite]
            self.assertBitEqual(fp8_encode_tensor(values[finite], fmt).long(), codes)

    def test_spot_values(self):
        self.assertEqual(fp8_decode(fp8_encode(2500.0, E5M2), E5M2), 2560.0)
        self.assertEqual(fp8_decode(fp8_encode(1.0, E4M3), E4M3), 1.0)
        self.assertEqual(fp8_encode(1.0, E4M3), 0x38)
        self.assertEqual(fp8_encode(-1.0, E4M3), 0xB8)

    def test_ties_to_even(self):
        # 1.0 (code 0x38) and 1.125 (0x39): the midpoint goes to the even code
        self.assertEqual(fp8_encode(1.0625, E4M3), 0x38)
        # 1.125 (0x39) and 1.25 (0x3A)
        self.assertEqual(fp8_encode(1.1875, E4M3), 0x3A)
        # Between the two smallest subnormals of E5M2
        self.assertEqual(fp8_encode(1.5 * 2.0 ** -16, E5M2), 2)
        self.assertEqual(fp8_encode(0.5 * 2.0 ** -16, E5M2), 0)

    def test_just_off_midpoint(self):
        # not representable in float32: the double value decides
        self.assertEqual(fp8_decode(fp8_encode(1.0625 + 1e-12, E4M3), E4M3), 1.125)
        self.assertEqual(fp8_decode(fp8_encode(1.0625 - 1e-12, E4M3), E4M3), 1.0)
        x = torch.tensor([1.0625 + 1e-12, -(1.0625 + 1e-12)], dtype=torch.float64)
        self.assertEqual(fp8_encode_tensor(x, E4M3).tolist(), [0x39, 0xB9])
        # 2304 is the midpoint of 2048 and 2560 in E5M2
        x = torch.tensor([2304.0 + 1e-9, 2304.0], dtype=torch.float64)
        self.assertEqual(fp8_decode_tensor(fp8_encode_tensor(x, E5M2), E5M2).tolist(), [2560.0, 2048.0])

    def test_signed_zero(self):
        self.assertEqual(fp8_encode(-0.0, E5M2), 0x80)
        self.assertEqual(fp8_encode(-1e-30, E4M3), 0x80)
        self.assertEqual(fp8_encode(0.0, E4M3), 0)

    def test_saturation(self):
        with self.assertWarns(SaturationWarning):
            code = fp8_encode(1e6, E5M2)
        self.assertEqual(fp8_decode(code, E5M2), 57344.0)
        with self.assertWarns(SaturationWarning):
            res = fp8_quantize_tensor(torch.tensor([-500.0, math.inf]), E4M3)
        self.assertBitEqual(res, torch.tensor([-448.0, 448.0]))

    def test_no_warning_in_range(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            fp8_quantize_tensor(torch.tensor([448.0, -300.0]), E4M3)

    def test_nan_rejected(self):
        with self.assertRaises(NonFiniteError):
            fp8_encode(float("nan"), E5M2)
        with self.assertRaises(NonFiniteError):
            fp8_encode_tensor(torch.tensor([1.0, float("nan")]), E4M3)

    def test_decode_errors(self):
        with self.assertRaises(ValueError):
            fp8_decode(256, E5M2)
        with self.assertRaises(TypeError):
            fp8_decode_tensor(torch.tensor([1.0]), E5M2)

    def test_matches_brute_force(self):
        for fmt in (E5M2, E4M3):
            x = torch.randn(10000) * torch.logspace(-6, 2, 10000)
            self.assertBitEqual(fp8_quantize_tensor(x, fmt), brute_force_fp8(x, fmt))

    def test_monotone(self):
        x = (torch.randn(10000) * torch.logspace(-6, 3, 10000)).sort().values
        for fmt in (E5M2, E4M3):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SaturationWarning)
                q = fp8_quantize_tensor(x, fmt)
            self.assertTrue(bool((q[1:] >= q[:-1]).all()), msg=fmt.name)

    @given(a=st.floats(-1e5, 1e5, allow_nan=False, width=32), b=st.floats(-1e5, 1e5, allow_nan=False, width=32))
    @settings(max_examples=200, deadline=None)
    def test_monotone_property(self, a, b):
        lo, hi = torch.tensor([min(a, b)]), torch.tensor([max(a, b)])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SaturationWarning)
            for fmt in (E5M2, E4M3):
                self.assertLessEqual(float(fp8_quantize_tensor(lo, fmt)), float(fp8_quantize_tensor(hi, fmt)))

    def test_idempotent(self):
        x = torch.randn(300) * 20
        for fmt in (E5M2, E4M3):
            once = fp8_quantize_tensor(x, fmt)
            self.assertBitEqual(fp8_quantize_tensor(once, fmt), once)

    def test_relative_error_bound(self):
        # Normal-range values are within half a unit in the last place
        x = torch.rand(1000) * 100 + 1
        for fmt in (E5M2, E4M3):
            rel = ((fp8_quantize_tensor(x, fmt) - x).abs() / x).max()
            self.assertLessEqual(float(rel), 2.0 ** -(fmt.mantissa_bits + 1))

    @given(value=st.floats(-448.0, 448.0, allow_nan=False, width=32))
    @settings(max_examples=200, deadline=None)
    def test_brute_force_property(self, value):
        x = torch.tensor([value], dtype=torch.float32)
        self.assertBitEqual(fp8_quantize_tensor(x, E4M3), brute_force_fp8(x, E4M3))
        self.assertBitEqual(fp8_quantize_tensor(x, E5M2), brute_force_fp8(x, E5M2))


if __name__ == "__main__":
    unittest.main()
