#!/usr/bin/env python3

import argparse
import csv
import io
import logging
import sys
import time
from collections import OrderedDict

from . import __version__, settings
from .data import corpus_stream, load_tokens, random_stream
from .harness import METRIC_COLUMNS, run_sweep
from .models import (
    PRESETS,
    ModelConfig,
    SpikeInjection,
    SpikeInjectionSpec,
    bundle_to_bytes,
    load_bundle,
    quant_error,
    save_bundle,
    synth_model,
)
from .planning import (
    Treatment,
    build_full_plan,
    build_random_plan,
    build_targeted_plan,
    build_uniform_plan,
    load_plan,
    save_plan,
    spike_sites,
)
from .profiling import collect_stats, load_report, save_report, write_curves
from .quantization import GRANULARITIES, calibrate_static_scales
from .utils.errors import ConfigError, FormatError, InvariantViolation, NonFiniteError, PlanError
from .utils.io import atomic_write, read_json, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INVARIANT = 4

METRICS_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1
COMPARE_COLUMNS = ("plan", "model_id", "bits", "granularity", "ppl", "ppl_delta", "logit_mse", "logit_max_abs_err")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class RunManifest(object):
    """
    What a command read and wrote, so the run can be replayed. Written next to the main output as
    `<output>.manifest.json`; artifacts embed it without the wall-clock duration, which keeps them
    byte-identical across reruns.
    """

    def __init__(self, command, inputs=None, seed=None, plan=None):
        self.command = command
        self.inputs = OrderedDict(inputs or ())
        self.seed = seed
        self.plan = plan
        self.outputs = []
        self._start = time.perf_counter()

    def add_output(self, path):
        self.outputs.append(str(path))

    def to_dict(self, with_duration=True):
        res = OrderedDict(
            [
                ("schema_version", MANIFEST_SCHEMA_VERSION),
                ("command", self.command),
                ("inputs", OrderedDict((k, v) for k, v in self.inputs.items())),
                ("seed", self.seed),
                ("plan", self.plan),
                ("outputs", list(self.outputs)),
                ("version", __version__),
            ]
        )
        if with_duration:
            res["duration_s"] = round(time.perf_counter() - self._start, 6)
        return res

    def write(self, primary_output):
        path = f"{primary_output}.manifest.json"
        write_json(path, self.to_dict())
        return path


def _stream_from_args(args, vocab_size):
    """The evaluation / calibration token stream selected by the stream flags, and its identifier."""
    if args.tokens is not None:
        return load_tokens(args.tokens), f"file:{args.tokens}"
    if args.corpus is not None:
        stream_id = f"corpus:n={args.corpus},offset={args.corpus_offset}"
        return corpus_stream(args.corpus, offset=args.corpus_offset), stream_id
    n = args.seed_stream if args.seed_stream is not None else 128
    return random_stream(n, vocab_size, seed=args.stream_seed), f"random:n={n},seed={args.stream_seed}"


def _stream_inputs(args):
    return OrderedDict(
        [
            ("tokens", args.tokens),
            ("seed_stream", args.seed_stream),
            ("corpus", args.corpus),
            ("stream_seed", args.stream_seed),
        ]
    )


def _rows_to_csv(rows, columns):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    return buffer.getvalue()


def cmd_synth(args):
    config = ModelConfig(
        n_layers=args.layers,
        d_model=args.d_model,
        n_heads=args.heads,
        d_ff=args.d_ff,
        vocab_size=args.vocab,
        rope_base=args.rope_base,
        rms_eps=args.rms_eps,
        max_context=args.max_context,
    )
    injections = []
    if args.preset is not None:
        injections.extend(PRESETS[args.preset](config.n_layers).injections)
    injections.extend(SpikeInjection.parse(text) for text in args.inject)
    inject = SpikeInjectionSpec(injections, bot_channel=args.bot_channel, bot_scale=args.bot_scale)
    manifest = RunManifest(
        "synth",
        inputs=[("config", config.to_dict()), ("injection", inject.to_dict())],
        seed=args.seed,
    )

    bundle = synth_model(config, inject, seed=args.seed)
    if args.calibrate:
        tokens = random_stream(args.calibrate, config.vocab_size, seed=args.seed)
        scales = calibrate_static_scales(bundle, tokens, bits=args.calibrate_bits)
        bundle = bundle.with_static_scales(scales, scale_bits=args.calibrate_bits)

    save_bundle(bundle, args.out)
    with open(args.out, "rb") as f:
        written = f.read()
    if bundle_to_bytes(load_bundle(args.out)) != written:
        raise InvariantViolation(f"{args.out} does not reload to an identical container")
    manifest.add_output(args.out)
    manifest.write(args.out)


def cmd_profile(args):
    model = load_bundle(args.model)
    tokens, stream_id = _stream_from_args(args, model.config.vocab_size)
    manifest = RunManifest("profile", inputs=[("model", args.model)] + list(_stream_inputs(args).items()))

    theta = args.theta if args.theta is not None else settings.spike_threshold.value()
    with settings.spike_threshold(theta):
        report = collect_stats(model, tokens, stream_id=stream_id)
    report.check()

    save_report(report, args.out)
    manifest.add_output(args.out)
    if args.curves is not None:
        for path in write_curves(report, args.curves):
            manifest.add_output(path)
    manifest.write(args.out)


def cmd_plan(args):
    report = load_report(args.report)
    manifest = RunManifest(
        "plan", inputs=[("report", args.report), ("reference", args.reference)], seed=args.seed if args.random else None
    )
    theta = args.theta if args.theta is not None else settings.spike_threshold.value()

    if args.random:
        if args.reference is None:
            raise PlanError("--random needs a --reference plan")
        plan = build_random_plan(report, load_plan(args.reference), args.seed)
    elif args.uniform:
        plan = build_uniform_plan(args.bits, args.granularity, model_id=report.model_id, weight_bits=args.weight_bits)
    elif args.full:
        plan = build_full_plan(model_id=report.model_id)
    else:
        plan = build_targeted_plan(
            report,
            theta=theta,
            high=args.high,
            bits=args.bits,
            granularity=args.granularity,
            weight_bits=args.weight_bits,
            apply_high_to_weights=args.round_high_weights,
        )
        missing = spike_sites(report, theta) - set(plan.high_sites())
        if missing:
            raise InvariantViolation(f"Targeted plan misses spike sites {sorted(missing)}")

    save_plan(plan, args.out)
    manifest.plan = plan.name
    manifest.add_output(args.out)
    manifest.write(args.out)


def cmd_eval(args):
    model = load_bundle(args.model)
    plan = load_plan(args.plan)
    tokens, stream_id = _stream_from_args(args, model.config.vocab_size)
    manifest = RunManifest(
        "eval", inputs=[("model", args.model), ("plan", args.plan)] + list(_stream_inputs(args).items()), plan=plan.name
    )
    manifest.add_output(args.out)

    errors = quant_error(
        model, tokens, plan, exclude_token=args.exclude_token, static_scales=True if args.static else None
    )
    if plan.is_full_precision() and (errors["logit_mse"] != 0 or errors["ppl_delta"] != 0):
        raise InvariantViolation(f"Full-precision plan {plan.name!r} changed the logits")

    metrics = OrderedDict(
        [
            ("schema_version", METRICS_SCHEMA_VERSION),
            ("plan", plan.name),
            ("model_id", model.model_id),
            ("bits", plan.default_bits),
            ("granularity", plan.granularity),
            ("stream_id", stream_id),
            ("n_tokens", len(tokens)),
            ("exclude_token", args.exclude_token),
            ("static_scales", bool(args.static)),
        ]
    )
    metrics.update(errors)
    metrics["manifest"] = manifest.to_dict(with_duration=False)
    write_json(args.out, metrics)
    logger.info(f"{plan.name}: ppl={errors['ppl']:.6g} logit_mse={errors['logit_mse']:.6g}")
    manifest.write(args.out)


def cmd_compare(args):
    manifest = RunManifest("compare", inputs=[("metrics", list(args.metrics))])
    rows = []
    keys = None
    for path in args.metrics:
        metrics = read_json(path, schema_version=METRICS_SCHEMA_VERSION)
        if keys is None:
            keys = list(metrics)
        elif list(metrics) != keys:
            raise FormatError(f"{path} does not share the fields of {args.metrics[0]}")
        missing = [column for column in COMPARE_COLUMNS if column not in metrics]
        if missing:
            raise FormatError(f"{path} lacks metrics {missing}")
        rows.append(metrics)

    atomic_write(args.out, _rows_to_csv(rows, COMPARE_COLUMNS))
    manifest.add_output(args.out)
    manifest.write(args.out)


def cmd_sweep(args):
    model = load_bundle(args.model)
    tokens, stream_id = _stream_from_args(args, model.config.vocab_size)
    manifest = RunManifest("sweep", inputs=[("model", args.model)] + list(_stream_inputs(args).items()))

    theta = args.theta if args.theta is not None else settings.spike_threshold.value()
    with settings.spike_threshold(theta):
        report = collect_stats(model, tokens, stream_id=stream_id)
    rows = run_sweep(
        model, tokens, bits=args.bits, granularities=args.granularity, seeds=args.seeds, theta=theta, report=report
    )

    atomic_write(args.out, _rows_to_csv(rows, METRIC_COLUMNS))
    manifest.add_output(args.out)
    manifest.write(args.out)


def _add_stream_args(parser):
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--tokens", help="token file (JSON list or whitespace-separated ids)")
    group.add_argument("--seed-stream", type=int, metavar="N", help="N pseudo-random tokens (default: 128)")
    group.add_argument("--corpus", type=int, metavar="N", help="N byte tokens of the bundled corpus")
    parser.add_argument("--stream-seed", type=int, default=0, help="seed of --seed-stream (default: 0)")
    parser.add_argument("--corpus-offset", type=int, default=0, help="byte offset of --corpus (default: 0)")


def _treatment(text):
    try:
        treatment = Treatment.parse(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e))
    if treatment.is_integer:
        raise argparse.ArgumentTypeError("the high-precision treatment cannot be integer quantization")
    return treatment


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spikequant", description="Spike-aware mixed-precision quantization of LLaMA-style decoders"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="debug logging")
    parser.add_argument("-q", "--quiet", action="count", default=0, help="warnings and errors only")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    synth = commands.add_parser("synth", help="build a synthetic (spiked) model container")
    synth.add_argument("--layers", type=int, default=8)
    synth.add_argument("--d-model", type=int, default=64)
    synth.add_argument("--heads", type=int, default=4)
    synth.add_argument("--d-ff", type=int, default=172)
    synth.add_argument("--vocab", type=int, default=256)
    synth.add_argument("--rope-base", type=float, default=None)
    synth.add_argument("--rms-eps", type=float, default=None)
    synth.add_argument("--max-context", type=int, default=None)
    synth.add_argument(
        "--inject", action="append", default=[], metavar="SPEC", help="layer=L,kind=K,channel=C,scale=S (repeatable)"
    )
    synth.add_argument("--preset", choices=list(PRESETS), default=None, help="named multi-site injection pattern")
    synth.add_argument("--bot-channel", type=int, default=None, help="spike this channel of the BOT token embedding")
    synth.add_argument("--bot-scale", type=float, default=100.0)
    synth.add_argument("--calibrate", type=int, default=0, metavar="N", help="embed static scales from N tokens")
    synth.add_argument("--calibrate-bits", type=int, default=8)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)

    profile = commands.add_parser("profile", help="collect per-site activation statistics")
    profile.add_argument("--model", required=True)
    _add_stream_args(profile)
    profile.add_argument("--theta", type=float, default=None, help="spike threshold (default: 100)")
    profile.add_argument("--out", required=True)
    profile.add_argument("--curves", default=None, metavar="DIR", help="write max-abs curves as CSV into DIR")
    profile.set_defaults(func=cmd_profile)

    plan = commands.add_parser("plan", help="build a precision plan from a spike report")
    plan.add_argument("--report", required=True)
    plan.add_argument("--theta", type=float, default=None, help="spike threshold (default: 100)")
    plan.add_argument("--high", type=_treatment, default=Treatment("fp16"), help="fp16, fp8e5m2, fp8e4m3 or full")
    plan.add_argument("--bits", type=int, default=8)
    plan.add_argument("--weight-bits", type=int, default=None)
    plan.add_argument("--granularity", choices=GRANULARITIES, default="per_tensor")
    plan.add_argument("--round-high-weights", action="store_true", help="round the weights of high sites as well")
    mode = plan.add_mutually_exclusive_group()
    mode.add_argument("--random", action="store_true", help="random placement with as many high sites as --reference")
    mode.add_argument("--uniform", action="store_true", help="naive plan: every site int(bits)")
    mode.add_argument("--full", action="store_true", help="no quantization at all")
    plan.add_argument("--reference", default=None)
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--out", required=True)
    plan.set_defaults(func=cmd_plan)

    evaluate = commands.add_parser("eval", help="evaluate a plan against full precision")
    evaluate.add_argument("--model", required=True)
    evaluate.add_argument("--plan", required=True)
    _add_stream_args(evaluate)
    evaluate.add_argument("--exclude-token", type=int, default=None, help="leave this token row unquantized")
    evaluate.add_argument("--static", action="store_true", help="use the static scales stored in the model")
    evaluate.add_argument("--out", required=True)
    evaluate.set_defaults(func=cmd_eval)

    compare = commands.add_parser("compare", help="tabulate metrics files")
    compare.add_argument("--metrics", nargs="+", required=True)
    compare.add_argument("--out", required=True)
    compare.set_defaults(func=cmd_compare)

    sweep = commands.add_parser("sweep", help="naive / targeted / random grid over bit-widths and granularities")
    sweep.add_argument("--model", required=True)
    _add_stream_args(sweep)
    sweep.add_argument("--bits", type=int, nargs="+", default=[6, 8])
    sweep.add_argument("--granularity", choices=GRANULARITIES, nargs="+", default=list(GRANULARITIES))
    sweep.add_argument("--seeds", type=int, nargs="*", default=[0, 1, 2])
    sweep.add_argument("--theta", type=float, default=None)
    sweep.add_argument("--out", required=True)
    sweep.set_defaults(func=cmd_sweep)
    return parser


def configure_logging(verbosity=0):
    level = logging.DEBUG if verbosity > 0 else logging.WARNING if verbosity < 0 else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv=None):
    """Run a command. Returns the exit code: 0 ok, 2 usage, 3 data or format error, 4 invariant violated."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    configure_logging(args.verbose - args.quiet)

    try:
        args.func(args)
    except InvariantViolation as e:
        logger.error(f"Invariant violated: {e}")
        return EXIT_INVARIANT
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (FormatError, PlanError, NonFiniteError, OSError) as e:
        logger.error(str(e))
        return EXIT_DATA
    return EXIT_OK


def run():
    sys.exit(main())
