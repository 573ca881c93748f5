#!/usr/bin/env python3
from .module import Module
from .sites import Site
from . import (
    data,
    functions,
    models,
    numerics,
    planning,
    profiling,
    quantization,
    settings,
    utils,
)
from .models import ModelBundle, ModelConfig, forward, load_bundle, quant_error, save_bundle, synth_model
from .planning import PrecisionPlan, build_random_plan, build_targeted_plan, load_plan, save_plan
from .profiling import SpikeReport, collect_stats, load_report, save_report


__version__ = "0.1.0"

__all__ = [
    # Submodules
    "data",
    "functions",
    "models",
    "numerics",
    "planning",
    "profiling",
    "quantization",
    "settings",
    "utils",
    # Classes
    "Module",
    "ModelBundle",
    "ModelConfig",
    "PrecisionPlan",
    "Site",
    "SpikeReport",
    # Functions
    "build_random_plan",
    "build_targeted_plan",
    "collect_stats",
    "forward",
    "load_bundle",
    "load_plan",
    "load_report",
    "quant_error",
    "save_bundle",
    "save_plan",
    "save_report",
    "synth_model",
    # Other
    "__version__",
]
