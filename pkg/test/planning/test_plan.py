#!/usr/bin/env python3

import json
import unittest

import spikequant
from spikequant.models import ModelConfig
from spikequant.planning import FULL, PrecisionPlan, Treatment, load_plan, save_plan, validate_plan
from spikequant.test.base_test_case import BaseTestCase
from spikequant.utils.errors import ConfigError, FormatError, PlanError
from spikequant.utils.io import write_json


class TestPrecisionPlan(BaseTestCase, unittest.TestCase):
    def _plan(self, **kwargs):
        sites = {(2, "down"): "fp16", (1, "out"): "fp8_e5m2", (3, "q"): "int4"}
        return PrecisionPlan(sites=sites, model_id="m", name="test", **kwargs)

    def test_treatments(self):
        plan = self._plan()
        self.assertEqual(plan.treatment_for(2, "down"), Treatment("fp16"))
        self.assertEqual(plan.treatment_for(3, "q"), Treatment("int", 4))
        self.assertEqual(plan.treatment_for(5, "gate"), Treatment("int", 8))
        self.assertEqual(plan.high_sites(), [(1, "out"), (2, "down")])
        self.assertEqual(plan.max_layer(), 3)
        self.assertFalse(plan.is_full_precision())

    def test_sites_in_canonical_order(self):
        self.assertEqual(list(self._plan().sites), [(1, "out"), (2, "down"), (3, "q")])

    def test_out_of_scope_is_full(self):
        plan = PrecisionPlan(scope=["down", "out"])
        self.assertEqual(plan.treatment_for(1, "q"), FULL)
        self.assertEqual(plan.treatment_for(1, "down"), Treatment("int", 8))
        self.assertTrue(PrecisionPlan(scope=[]).is_full_precision())

    def test_full_plan(self):
        plan = PrecisionPlan(default_bits=None)
        self.assertEqual(plan.name, "full")
        self.assertEqual(plan.default_treatment, FULL)
        self.assertTrue(plan.is_full_precision())

    def test_invalid(self):
        with self.assertRaises(PlanError):
            PrecisionPlan(scope=["q", "rmsnorm_in"])
        with self.assertRaises(PlanError):
            PrecisionPlan(scope=["down"], sites={(1, "q"): "fp16"})
        with self.assertRaises(PlanError):
            PrecisionPlan(sites={(0, "q"): "fp16"})
        with self.assertRaises(ConfigError):
            PrecisionPlan(default_bits=12)
        with self.assertRaises(ConfigError):
            PrecisionPlan(granularity="per_channel")
        with self.assertRaises(ConfigError):
            PrecisionPlan(sites={(1, "q"): "bf16"})

    def test_high_weights_follow_setting(self):
        self.assertFalse(PrecisionPlan().apply_high_to_weights)
        with spikequant.settings.quantize_high_weights(True):
            self.assertTrue(PrecisionPlan().apply_high_to_weights)
        self.assertTrue(PrecisionPlan(apply_high_to_weights=True).apply_high_to_weights)

    def test_validate(self):
        plan = self._plan()
        validate_plan(plan, ModelConfig(n_layers=3))
        with self.assertRaises(PlanError):
            validate_plan(plan, ModelConfig(n_layers=2))

    def test_dict_layout(self):
        d = self._plan(seed=4).to_dict()
        self.assertEqual(
            list(d),
            [
                "schema_version",
                "name",
                "model_id",
                "default_bits",
                "weight_bits",
                "granularity",
                "apply_high_to_weights",
                "scope",
                "sites",
                "seed",
            ],
        )
        self.assertEqual(d["sites"][0], {"layer": 1, "kind": "out", "boundary": "input", "treatment": "fp8_e5m2"})
        self.assertEqual(d["scope"], ["q", "k", "v", "out", "gate", "up", "down"])

    def test_save_load(self):
        plan = self._plan(weight_bits=4, granularity="per_token")
        path = self.tmp_path("plan.json")
        save_plan(plan, path)
        self.assertEqual(load_plan(path), plan)
        with open(path) as f:
            first = f.read()
        save_plan(load_plan(path), path)
        with open(path) as f:
            self.assertEqual(f.read(), first)

    def test_malformed(self):
        path = self.tmp_path("plan.json")
        d = self._plan().to_dict()
        d["sites"].append(dict(d["sites"][0]))
        write_json(path, d)
        with self.assertRaises(PlanError):
            load_plan(path)

        d = self._plan().to_dict()
        d["sites"][0]["boundary"] = "output"
        write_json(path, d)
        with self.assertRaises(PlanError):
            load_plan(path)

        d = self._plan().to_dict()
        d["sites"][0]["treatment"] = "int99"
        write_json(path, d)
        with self.assertRaises(FormatError):
            load_plan(path)

        d = self._plan().to_dict()
        d["sites"][0]["layer"] = "two"
        write_json(path, d)
        with self.assertRaises(FormatError):
            load_plan(path)

        d = self._plan().to_dict()
        del d["scope"]
        write_json(path, d)
        with self.assertRaises(FormatError):
            load_plan(path)

        with open(path, "w") as f:
            f.write("{not json")
        with self.assertRaises(FormatError):
            load_plan(path)

    def test_json_has_no_tuples(self):
        json.dumps(self._plan().to_dict())


if __name__ == "__main__":
    unittest.main()
