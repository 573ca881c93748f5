#!/usr/bin/env python3

from .builders import (
    TARGET_KINDS,
    build_full_plan,
    build_random_plan,
    build_targeted_plan,
    build_uniform_plan,
    spike_sites,
)
from .plan import PLAN_SCHEMA_VERSION, PrecisionPlan, default_scope, load_plan, save_plan, validate_plan
from .treatment import FULL, TREATMENT_KINDS, Treatment

__all__ = [
    "FULL",
    "PLAN_SCHEMA_VERSION",
    "PrecisionPlan",
    "TARGET_KINDS",
    "TREATMENT_KINDS",
    "Treatment",
    "build_full_plan",
    "build_random_plan",
    "build_targeted_plan",
    "build_uniform_plan",
    "default_scope",
    "load_plan",
    "save_plan",
    "spike_sites",
    "validate_plan",
]
