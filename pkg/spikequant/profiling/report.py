#!/usr/bin/env python3

import csv
import io
import logging
from collections import OrderedDict

import torch

from .. import settings
from ..models.evaluation import forward
from ..sites import BOUNDARIES, SITE_KINDS, Site
from ..utils.errors import ConfigError, FormatError, InvariantViolation
from ..utils.io import atomic_write, read_json, write_json
from .detection import detect_llmint8_report, detect_threshold
from .stats import SiteStats, StatsCollector

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
DEFINITIONS = ("threshold", "sigma", "order_of_magnitude", "llmint8")
CURVE_HEADER = ("layer", "input_max_abs", "output_max_abs")


class SpikeReport(object):
    """
    Per-site activation statistics of a model over a calibration stream, with the spike sites
    found under each definition.

    Attributes:
        :attr:`stats` (list of :class:`SiteStats`): in canonical site order
        :attr:`detected` (OrderedDict): definition -> detected entries. `threshold`, `sigma` and
            `order_of_magnitude` hold :class:`spikequant.sites.Site` lists; `llmint8` holds
            `{"kind", "boundary", "dimensions"}` dicts
        :attr:`model_id` (str)
        :attr:`stream_id` (str)
        :attr:`n_layers` (int)
        :attr:`n_tokens` (int): tokens observed, over all streams
        :attr:`settings` (OrderedDict): detection thresholds in force at collection time
    """

    def __init__(self, stats, model_id=None, stream_id=None, n_layers=0, n_tokens=0, detected=None, settings=None):
        self.stats = sorted(stats, key=lambda s: s.site.sort_key())
        self.model_id = model_id
        self.stream_id = stream_id
        self.n_layers = n_layers
        self.n_tokens = n_tokens
        self.settings = settings if settings is not None else _current_settings()
        self.detected = detected if detected is not None else self._detect()
        self._by_site = OrderedDict((s.site, s) for s in self.stats)

    def _detect(self):
        detected = OrderedDict((definition, []) for definition in DEFINITIONS)
        if not self.stats:
            return detected
        detected["threshold"] = detect_threshold(self, self.settings["spike_threshold"])
        detected["sigma"] = [s.site for s in self.stats if s.sigma_outliers]
        detected["order_of_magnitude"] = [s.site for s in self.stats if s.magnitude_outliers]
        for kind in SITE_KINDS:
            for boundary in BOUNDARIES:
                if not any(s.site.kind == kind and s.site.boundary == boundary for s in self.stats):
                    continue
                dims = detect_llmint8_report(self, kind, boundary)
                if len(dims):
                    detected["llmint8"].append(
                        OrderedDict([("kind", kind), ("boundary", boundary), ("dimensions", dims.tolist())])
                    )
        return detected

    def get(self, site):
        return self._by_site[site]

    def __contains__(self, site):
        return site in self._by_site

    def check(self):
        """Raise an :class:`spikequant.utils.errors.InvariantViolation` if the report is inconsistent."""
        for stats in self.stats:
            stats.check()
        for definition in ("threshold", "sigma", "order_of_magnitude"):
            for site in self.detected[definition]:
                if site not in self._by_site:
                    raise InvariantViolation(f"Detected site {site} ({definition}) has no statistics")
        for entry in self.detected["llmint8"]:
            if not any(s.site.kind == entry["kind"] and s.site.boundary == entry["boundary"] for s in self.stats):
                raise InvariantViolation(f"LLM.int8() detection at {entry['kind']} has no statistics")
        return self

    def to_dict(self):
        detected = OrderedDict()
        for definition, entries in self.detected.items():
            if definition == "llmint8":
                detected[definition] = [OrderedDict(entry) for entry in entries]
            else:
                detected[definition] = [site.to_dict() for site in entries]
        return OrderedDict(
            [
                ("schema_version", REPORT_SCHEMA_VERSION),
                ("model_id", self.model_id),
                ("stream_id", self.stream_id),
                ("n_layers", self.n_layers),
                ("n_tokens", self.n_tokens),
                ("settings", OrderedDict(self.settings)),
                ("detected", detected),
                ("stats", [s.to_dict() for s in self.stats]),
            ]
        )

    @classmethod
    def from_dict(cls, d):
        try:
            detected = OrderedDict()
            for definition in DEFINITIONS:
                entries = d["detected"][definition]
                if definition == "llmint8":
                    detected[definition] = [OrderedDict(entry) for entry in entries]
                else:
                    detected[definition] = [Site.from_dict(entry) for entry in entries]
            return cls(
                [SiteStats.from_dict(s) for s in d["stats"]],
                model_id=d["model_id"],
                stream_id=d["stream_id"],
                n_layers=d["n_layers"],
                n_tokens=d["n_tokens"],
                detected=detected,
                settings=OrderedDict(d["settings"]),
            )
        except (KeyError, TypeError, ConfigError) as e:
            raise FormatError(f"Malformed spike report: {e!r}")

    def __repr__(self):
        return f"SpikeReport({self.model_id!r}, {len(self.stats)} sites, {len(self.detected['threshold'])} spiked)"


def _current_settings():
    return OrderedDict(
        [
            ("spike_threshold", settings.spike_threshold.value()),
            ("sigma_multiplier", settings.sigma_multiplier.value()),
            ("order_of_magnitude_factor", settings.order_of_magnitude_factor.value()),
            ("llmint8_magnitude", settings.llmint8_magnitude.value()),
            ("llmint8_layer_fraction", settings.llmint8_layer_fraction.value()),
            ("llmint8_token_fraction", settings.llmint8_token_fraction.value()),
        ]
    )


def collect_stats(model, tokens, stream_id=None, sites=None):
    """
    Run the model in full precision over one or several token streams and record exact statistics
    at both boundaries of every projection and normalization (or only at `sites`).

    Args:
        :attr:`model` (:class:`spikequant.models.ModelBundle`)
        :attr:`tokens` (sequence of int, or a list of sequences)
        :attr:`stream_id` (str, optional): identifies the calibration stream in the report
        :attr:`sites` (iterable of :class:`spikequant.sites.Site`, optional)

    Returns:
        :class:`SpikeReport`
    """
    streams = _as_streams(tokens)
    collector = StatsCollector(sites)
    for stream in streams:
        forward(model, stream, tap=collector)
        collector.next_stream(len(stream))

    report = SpikeReport(
        collector.stats.values(),
        model_id=model.model_id,
        stream_id=stream_id,
        n_layers=model.config.n_layers,
        n_tokens=collector.token_offset,
    )
    logger.info(
        f"Profiled {len(report.stats)} sites of {model.model_id} over {report.n_tokens} tokens; "
        f"{len(report.detected['threshold'])} above {report.settings['spike_threshold']:g}"
    )
    for site in report.detected["threshold"]:
        logger.debug(f"Spike at {site}: max |x| = {report.get(site).max_abs:.6g}")
    return report


def _as_streams(tokens):
    if torch.is_tensor(tokens):
        tokens = tokens.tolist()
    tokens = list(tokens)
    if not tokens:
        raise ConfigError("Cannot profile an empty token stream")
    if all(isinstance(t, int) for t in tokens):
        return [tokens]
    streams = [s.tolist() if torch.is_tensor(s) else list(s) for s in tokens]
    if not all(streams):
        raise ConfigError("Cannot profile an empty token stream")
    return streams


def export_curves(report, kind):
    """
    Max-abs-over-layers curve of projection / norm `kind`: one `(layer, input_max_abs, output_max_abs)`
    row per layer.
    """
    if kind not in SITE_KINDS:
        raise ConfigError(f"Unknown projection kind {kind!r}. Expected one of {SITE_KINDS}")
    rows = []
    for layer in range(1, report.n_layers + 1):
        row = [layer]
        for boundary in BOUNDARIES:
            site = Site(layer, kind, boundary)
            if site not in report:
                raise ConfigError(f"The report does not cover {site}")
            row.append(report.get(site).max_abs)
        rows.append(tuple(row))
    return rows


def curves_to_csv(rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for layer, input_max, output_max in rows:
        writer.writerow([layer, repr(float(input_max)), repr(float(output_max))])
    return buffer.getvalue()


def write_curves(report, directory, kinds=SITE_KINDS):
    """Write one `<kind>.csv` curve per site kind into `directory`. Returns the written paths."""
    paths = []
    for kind in kinds:
        path = f"{directory}/{kind}.csv"
        atomic_write(path, curves_to_csv(export_curves(report, kind)))
        paths.append(path)
    logger.info(f"Wrote {len(paths)} curves to {directory}")
    return paths


def save_report(report, path):
    write_json(path, report.to_dict())
    return path


def load_report(path):
    return SpikeReport.from_dict(read_json(path, schema_version=REPORT_SCHEMA_VERSION))
