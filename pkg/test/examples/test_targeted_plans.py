#!/usr/bin/env python3

import logging
import unittest

from spikequant.data import random_stream
from spikequant.harness import evaluate_plan, targeted_vs_random
from spikequant.planning import build_targeted_plan, build_uniform_plan
from spikequant.profiling import collect_stats
from spikequant.test.base_test_case import BaseTestCase
from spikequant.test.utils import spiked_model

logger = logging.getLogger(__name__)


class TestTargetedPlans(BaseTestCase, unittest.TestCase):
    def _setting(self, seed):
        model = spiked_model(seed=seed)
        tokens = random_stream(128, model.config.vocab_size, seed=seed)
        return model, tokens, collect_stats(model, tokens)

    def test_targeted_beats_naive(self):
        for seed in range(5):
            model, tokens, report = self._setting(seed)
            naive = evaluate_plan(model, tokens, build_uniform_plan(8, "per_tensor"))
            targeted = evaluate_plan(model, tokens, build_targeted_plan(report, bits=8, granularity="per_tensor"))
            self.assertLess(targeted["logit_mse"], naive["logit_mse"], msg=f"seed {seed}")
            # the sign of a perplexity change is arbitrary on random weights; compare magnitudes
            self.assertLess(abs(targeted["ppl_delta"]), abs(naive["ppl_delta"]), msg=f"seed {seed}")

    def test_random_placement_does_not_help(self):
        model, tokens, report = self._setting(0)
        res = targeted_vs_random(model, tokens, report, seeds=(0, 1, 2))
        logger.info(f"random / targeted logit MSE: {res['ratio']:.3f}")
        self.assertGreaterEqual(res["ratio"], 1.0)

    def test_fp8_high_precision_close_to_fp16(self):
        model, tokens, report = self._setting(0)
        fp16 = evaluate_plan(model, tokens, build_targeted_plan(report, high="fp16"))
        fp8 = evaluate_plan(model, tokens, build_targeted_plan(report, high="fp8_e5m2"))
        self.assertLessEqual(fp8["logit_mse"], 2 * fp16["logit_mse"])


if __name__ == "__main__":
    unittest.main()
