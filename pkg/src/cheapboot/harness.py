"""Declarative Monte Carlo coverage experiments.

An :class:`ExperimentConfig` names a scenario, a list of methods (each with
the ``B`` values to sweep) and the repetition count. :func:`run_experiment`
regenerates data once per repetition and feeds every method the same data,
so method differences are not confounded with data differences.

Streams for repetition ``r`` are ``(seed, stream_id(r, role))``; the result
is therefore identical for any number of worker processes.

Within a repetition the methods of one family share resamples: the
``cheap``/``basic``/``percentile``/``se`` rows at every ``B`` all use prefixes
of the same ``max(B)`` resample estimates.
"""

import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import rng
from .baselines import basic_bootstrap_interval, percentile_bootstrap_interval, se_bootstrap_interval
from .cheap import (
    ResampleSummary,
    check_alpha,
    cheap_interval,
    cheap_one_sided,
    cheap_region,
    cheap_se_interval,
    evaluate,
    region_contains,
)
from .distributions import normal_quantile
from .errors import ConfigError, DomainError, EstimatorError, InsufficientResamples, SingularScatter
from .nested import (
    NestedEstimate,
    ThetaGrid,
    interval_centered_mean,
    interval_centered_original,
    solve_qO,
)
from .rng import RandomStream, stream_id
from .scenarios import (
    QUEUE_SERVICE_RATE,
    SCENARIOS,
    ScenarioSpec,
    closed_form_truth,
    generate,
    nested_runs,
    queue_ground_truth,
    scenario,
)
from .subsampling import SubsamplePlan, subsample_interval, subsample_summary, subsample_size

log = logging.getLogger(__name__)

__all__ = [
    "SCHEMA_VERSION",
    "METHODS",
    "CSV_HEADER",
    "MethodSpec",
    "ExperimentConfig",
    "ReportRow",
    "ExperimentReport",
    "default_threads",
    "resolve_truth",
    "run_experiment",
    "emit_report",
    "format_report",
    "report_to_dict",
    "report_from_dict",
]

SCHEMA_VERSION = 1
CSV_HEADER = ["method", "B", "alpha", "coverage", "coverage_moe", "width_mean", "width_sd", "na_count", "reps", "seed"]

# tag -> (family, minimum B)
METHODS = {
    "cheap": ("full", 1),
    "basic": ("full", 2),
    "percentile": ("full", 2),
    "se": ("full", 2),
    "cheap-se": ("full", 1),
    "cheap-upper": ("full", 1),
    "cheap-lower": ("full", 1),
    "region": ("full", 1),
    "mn": ("mn", 1),
    "blb": ("blb", 1),
    "sdb": ("sdb", 1),
    "io": ("nested", 1),
    "im": ("nested", 2),
}
_NESTED_OK = {"cheap", "basic", "percentile", "se", "io", "im"}
_FAMILY_ROLE = {"full": rng.ROLE_RESAMPLE, "mn": rng.ROLE_MN, "blb": rng.ROLE_BLB, "sdb": rng.ROLE_SDB}


def default_threads():
    """Worker count from ``CHEAPBOOT_THREADS`` (default 1)."""
    raw = os.environ.get("CHEAPBOOT_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"must be a positive integer, got {raw!r}", "CHEAPBOOT_THREADS") from None
    if value < 1:
        raise ConfigError(f"must be a positive integer, got {raw!r}", "CHEAPBOOT_THREADS")
    return value


@dataclass(frozen=True)
class MethodSpec:
    """One method and the ``B`` values to sweep.

    ``s`` or ``gamma`` set the subsample size of ``mn``/``blb``/``sdb``
    (``s = ceil(n ** gamma)`` when ``s`` is absent). ``label`` distinguishes
    two entries with the same tag in the report.
    """

    tag: str
    B: tuple
    s: int = None
    gamma: float = 0.6
    label: str = None

    def __post_init__(self):
        object.__setattr__(self, "B", tuple(int(b) for b in self.B))
        if self.label is None:
            object.__setattr__(self, "label", self.tag)

    @property
    def family(self):
        return METHODS[self.tag][0]

    @property
    def min_B(self):
        return METHODS[self.tag][1]

    def to_dict(self):
        out = {"tag": self.tag, "B": list(self.B)}
        if self.s is not None:
            out["s"] = self.s
        if self.family in ("mn", "blb", "sdb"):
            out["gamma"] = self.gamma
        if self.label != self.tag:
            out["label"] = self.label
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSpec
    methods: tuple
    alpha: float = 0.05
    repetitions: int = 1000
    seed: int = 12345
    profile: str = "desk"
    qO_grid: str = "fast"
    qO_N: int = 100_000
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        self.validate()

    def validate(self):
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema {self.schema!r}; expected {SCHEMA_VERSION}", "schema")
        if not isinstance(self.repetitions, int) or self.repetitions < 1:
            raise ConfigError(f"must be a positive integer, got {self.repetitions!r}", "repetitions")
        try:
            check_alpha(self.alpha)
        except DomainError as exc:
            raise ConfigError(str(exc), "alpha") from None
        if self.profile not in ("desk", "full"):
            raise ConfigError(f"must be 'desk' or 'full', got {self.profile!r}", "profile")
        if self.qO_grid not in ("fast", "paper"):
            raise ConfigError(f"must be 'fast' or 'paper', got {self.qO_grid!r}", "qO.grid")
        if self.qO_N < 10_000:
            raise ConfigError(f"must be at least 10^4, got {self.qO_N}", "qO.N")
        labels = set()
        for i, m in enumerate(self.methods):
            path = f"methods[{i}]"
            if m.tag not in METHODS:
                raise ConfigError(f"unknown method {m.tag!r}; known: {', '.join(METHODS)}", f"{path}.tag")
            if not m.B:
                raise ConfigError("needs at least one B value", f"{path}.B")
            for j, b in enumerate(m.B):
                if b < 1:
                    raise ConfigError(f"B must be positive, got {b}", f"{path}.B[{j}]")
            if m.label in labels:
                raise ConfigError(f"duplicate label {m.label!r}", f"{path}.label")
            labels.add(m.label)
            if self.scenario.nested and m.tag not in _NESTED_OK:
                raise ConfigError(f"method {m.tag!r} does not apply to nested scenarios", f"{path}.tag")
            if not self.scenario.nested and m.family == "nested":
                raise ConfigError(f"method {m.tag!r} needs a nested scenario", f"{path}.tag")
            if m.tag == "cheap-se" and self.scenario.true_sigma is None:
                raise ConfigError("cheap-se needs scenario.true_sigma", f"{path}.tag")
            if m.s is not None and not 1 <= m.s <= self.scenario.n:
                raise ConfigError(f"s must lie in [1, n={self.scenario.n}]", f"{path}.s")
            if not 0 < m.gamma <= 1:
                raise ConfigError(f"gamma must lie in (0, 1], got {m.gamma}", f"{path}.gamma")

    # -- JSON ----------------------------------------------------------------

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - {"schema", "scenario", "methods", "alpha", "repetitions", "seed", "profile", "qO"}
        if unknown:
            raise ConfigError(f"unknown field(s) {sorted(unknown)}", sorted(unknown)[0])
        if "schema" not in doc:
            raise ConfigError("missing required field", "schema")
        profile = doc.get("profile", "desk")
        spec = _scenario_from_doc(doc.get("scenario"), profile)
        raw_methods = doc.get("methods")
        if not isinstance(raw_methods, list):
            raise ConfigError("must be a list", "methods")
        methods = [_method_from_doc(m, f"methods[{i}]") for i, m in enumerate(raw_methods)]
        qO = doc.get("qO", {})
        if not isinstance(qO, dict):
            raise ConfigError("must be an object", "qO")
        return cls(
            spec,
            methods,
            alpha=doc.get("alpha", 0.05),
            repetitions=doc.get("repetitions", 1000),
            seed=doc.get("seed", 12345),
            profile=profile,
            qO_grid=qO.get("grid", "fast"),
            qO_N=qO.get("N", 100_000),
            schema=doc["schema"],
        )

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", str(path)) from None
        return cls.from_dict(doc)

    def to_dict(self):
        return {
            "schema": self.schema,
            "scenario": self.scenario.to_dict(),
            "methods": [m.to_dict() for m in self.methods],
            "alpha": self.alpha,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "profile": self.profile,
            "qO": {"grid": self.qO_grid, "N": self.qO_N},
        }


def _scenario_from_doc(doc, profile):
    if isinstance(doc, str):
        doc = {"name": doc}
    if not isinstance(doc, dict) or "name" not in doc:
        raise ConfigError("must be a scenario name or an object with a 'name'", "scenario")
    name = doc["name"]
    if profile == "full" and f"{name}_full" in SCENARIOS:
        name = f"{name}_full"
    overrides = {k: v for k, v in doc.items() if k != "name"}
    if name not in SCENARIOS and "generator" not in overrides:
        raise ConfigError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}", "scenario.name")
    try:
        if name in SCENARIOS:
            return scenario(name, **overrides)
        return ScenarioSpec(name=name, **overrides)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], "scenario.name") from None
    except TypeError as exc:
        raise ConfigError(str(exc), "scenario") from None


def _method_from_doc(doc, path):
    if not isinstance(doc, dict):
        raise ConfigError("must be an object", path)
    unknown = set(doc) - {"tag", "B", "s", "gamma", "label"}
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)}", f"{path}.{sorted(unknown)[0]}")
    if "tag" not in doc:
        raise ConfigError("missing required field", f"{path}.tag")
    B = doc.get("B")
    if isinstance(B, int):
        B = [B]
    if not isinstance(B, list) or not all(isinstance(b, int) for b in B):
        raise ConfigError("must be an integer or a list of integers", f"{path}.B")
    return MethodSpec(doc["tag"], tuple(B), doc.get("s"), doc.get("gamma", 0.6), doc.get("label"))


# --------------------------------------------------------------------------
# ground truth


@lru_cache(maxsize=8)
def _queue_truth(seed, runs, service_rate, customers, arrival_rate):
    stream = RandomStream(seed, stream_id(0, rng.ROLE_ORACLE))
    return queue_ground_truth(stream, runs, arrival_rate, service_rate, customers)


def resolve_truth(spec, seed):
    """The scenario's true value: given, closed form, or simulated by the queue oracle."""
    if spec.true_value is not None:
        return spec.true_value
    if spec.computation == "queue":
        cp = spec.computation_params
        return _queue_truth(
            int(seed), int(cp.get("oracle_runs", 1_000_000)), float(cp.get("service_rate", QUEUE_SERVICE_RATE)),
            int(cp.get("customers", 10)), float(spec.generator_params.get("rate", 1.0)),
        )
    truth = closed_form_truth(spec)
    if truth is None:
        raise ConfigError(f"no known true value for scenario {spec.name!r}; set true_value", "scenario.true_value")
    return truth


# --------------------------------------------------------------------------
# one repetition


@dataclass
class _Context:
    config: ExperimentConfig
    truth: object
    qO: dict = field(default_factory=dict)


def _record(out, label, B, interval, truth):
    width = interval.width
    out[(label, B)] = (bool(interval.contains(truth)), width if math.isfinite(width) else None)


def _full_resamples(data, estimator, B_max, stream):
    """Up to ``B_max`` full-size resample estimates; stops at the first estimator failure."""
    n = len(data)
    est = []
    for b in range(B_max):
        try:
            est.append(evaluate(estimator, rng.resample_with_replacement(data, n, stream), b))
        except EstimatorError as exc:
            log.debug("repetition resample failed: %s", exc)
            break
    return est


def _apply_full(tag, summary, alpha):
    if tag == "cheap":
        return cheap_interval(summary, alpha)
    if tag == "basic":
        return basic_bootstrap_interval(summary, alpha)
    if tag == "percentile":
        return percentile_bootstrap_interval(summary, alpha)
    if tag == "se":
        return se_bootstrap_interval(summary, alpha)
    if tag == "cheap-se":
        return cheap_se_interval(summary, alpha)
    if tag == "cheap-upper":
        return cheap_one_sided(summary, alpha, "upper")
    if tag == "cheap-lower":
        return cheap_one_sided(summary, alpha, "lower")
    raise DomainError(f"unhandled method {tag!r}")


def _run_full(methods, data, estimator, ctx, r, out):
    cfg = ctx.config
    try:
        psi_hat = evaluate(estimator, data)
    except EstimatorError:
        return
    B_max = max(max(m.B) for m in methods)
    stream = RandomStream(cfg.seed, stream_id(r, rng.ROLE_RESAMPLE))
    est = _full_resamples(data, estimator, B_max, stream)
    vector = np.ndim(psi_hat) > 0
    for m in methods:
        for B in m.B:
            if B > len(est) or B < m.min_B:
                continue
            summary = ResampleSummary(psi_hat, np.array(est[:B]), len(data))
            if m.tag == "region":
                try:
                    region = cheap_region(summary, cfg.alpha)
                    out[(m.label, B)] = (bool(region_contains(region, ctx.truth)), None)
                except (InsufficientResamples, SingularScatter):
                    pass
                continue
            if vector:
                raise ConfigError(f"method {m.tag!r} needs a scalar estimator", "methods")
            truth = cfg.scenario.true_sigma if m.tag == "cheap-se" else ctx.truth
            _record(out, m.label, B, _apply_full(m.tag, summary, cfg.alpha), truth)


def _run_subsampling(m, index, data, estimator, ctx, r, out):
    cfg = ctx.config
    n = len(data)
    s = m.s if m.s is not None else subsample_size(n, m.gamma)
    variant = {"mn": "m_out_of_n"}.get(m.tag, m.tag)
    stream = RandomStream(cfg.seed, stream_id((r << 8) | index, _FAMILY_ROLE[m.family]))
    try:
        summary = subsample_summary(data, estimator, SubsamplePlan(variant, s, n, max(m.B)), stream)
    except EstimatorError:
        return
    for B in m.B:
        _record(out, m.label, B, subsample_interval(summary.head(B), cfg.alpha), ctx.truth)


def _noisy_runs(spec, sample, R, stream):
    """``R`` unbiased noisy outputs of the computation on ``sample``."""
    cp = spec.computation_params
    if spec.computation == "queue":
        return nested_runs(sample, R, stream, cp.get("service_rate"), cp.get("customers", 10))
    if spec.computation == "noisy_mean":
        return float(np.mean(sample)) + cp.get("tau", 1.0) * stream.normals(R)
    raise DomainError(f"unknown computation {spec.computation!r}")


def _run_nested(methods, data, ctx, r, out):
    cfg = ctx.config
    spec = cfg.scenario
    R0 = int(spec.computation_params.get("R0", 50))
    R = int(spec.computation_params.get("R", 50))
    noise = RandomStream(cfg.seed, stream_id(r, rng.ROLE_NOISE))
    resample = RandomStream(cfg.seed, stream_id(r, rng.ROLE_RESAMPLE))
    point = float(np.mean(_noisy_runs(spec, data, R0, noise)))
    B_max = max(max(m.B) for m in methods)
    est = np.array([
        np.mean(_noisy_runs(spec, rng.resample_with_replacement(data, len(data), resample), R, noise))
        for _ in range(B_max)
    ])
    full = NestedEstimate(point, R0, R, est)
    for m in methods:
        for B in m.B:
            if B < m.min_B:
                continue
            e = full.head(B)
            if m.tag == "io":
                iv = interval_centered_original(e, cfg.alpha, ctx.qO[(B, e.rho)])
            elif m.tag == "im":
                iv = interval_centered_mean(e, cfg.alpha)
            else:
                iv = _apply_full(m.tag, e.summary(), cfg.alpha)
            _record(out, m.label, B, iv, ctx.truth)


def _run_repetition(ctx, r):
    """Outcomes ``{(label, B): (covered, width)}``; missing keys are NA."""
    cfg = ctx.config
    spec = cfg.scenario
    data = generate(spec.generator, spec.n, RandomStream(cfg.seed, stream_id(r, rng.ROLE_DATA)), **spec.generator_params)
    out = {}
    if spec.nested:
        _run_nested(cfg.methods, data, ctx, r, out)
        return out
    estimator = spec.make_estimator()
    full = [m for m in cfg.methods if m.family == "full"]
    if full:
        _run_full(full, data, estimator, ctx, r, out)
    for i, m in enumerate(cfg.methods):
        if m.family in ("mn", "blb", "sdb"):
            _run_subsampling(m, i, data, estimator, ctx, r, out)
    return out


def _run_block(ctx, indices):
    return [_run_repetition(ctx, r) for r in indices]


# --------------------------------------------------------------------------
# report


def _sig6(x):
    if x is None or not math.isfinite(x):
        return math.nan
    return float(f"{x:.6g}")


@dataclass(frozen=True)
class ReportRow:
    method: str
    B: int
    alpha: float
    coverage: float
    coverage_moe: float
    width_mean: float
    width_sd: float
    na_count: int
    reps: int
    seed: int

    def values(self):
        return [getattr(self, k) for k in CSV_HEADER]


@dataclass
class ExperimentReport:
    """Aggregated rows plus run metadata.

    ``runtime_seconds`` is informational and never written by
    :func:`emit_report`, so that reports from equal seeds are byte-identical.
    """

    rows: list
    config: dict = None
    truth: object = None
    runtime_seconds: float = None

    def row(self, method, B):
        for r in self.rows:
            if r.method == method and r.B == B:
                return r
        raise KeyError((method, B))


def _aggregate(label, B, outcomes, cfg):
    hits = [o[(label, B)] for o in outcomes if (label, B) in o]
    reps = len(outcomes)
    na = reps - len(hits)
    if not hits:
        nan = math.nan
        return ReportRow(label, B, cfg.alpha, nan, nan, nan, nan, na, reps, cfg.seed)
    cov = sum(h[0] for h in hits) / len(hits)
    moe = normal_quantile(0.975) * math.sqrt(cov * (1 - cov) / len(hits))
    widths = np.array([h[1] for h in hits if h[1] is not None], dtype=float)
    w_mean = float(widths.mean()) if widths.size else math.nan
    w_sd = float(widths.std()) if widths.size else math.nan
    return ReportRow(label, B, cfg.alpha, _sig6(cov), _sig6(moe), _sig6(w_mean), _sig6(w_sd), na, reps, cfg.seed)


def run_experiment(config, threads=None):
    """Run every repetition of ``config`` and aggregate per ``(method, B)``.

    Parameters
    ----------
    config : ExperimentConfig
    threads : int, optional
        Worker processes; defaults to ``CHEAPBOOT_THREADS`` or 1. The report
        does not depend on it.
    """
    start = time.perf_counter()
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ConfigError(f"must be positive, got {threads}", "threads")
    truth = resolve_truth(config.scenario, config.seed)
    ctx = _Context(config, truth)
    if config.scenario.nested:
        R0 = config.scenario.computation_params.get("R0", 50)
        R = config.scenario.computation_params.get("R", 50)
        rho = math.sqrt(R0 / R)
        grid = ThetaGrid.named(config.qO_grid)
        for m in config.methods:
            if m.tag == "io":
                for B in m.B:
                    if (B, rho) not in ctx.qO:
                        stream = RandomStream(config.seed, stream_id(B, rng.ROLE_PIVOT))
                        ctx.qO[(B, rho)] = solve_qO(B, config.alpha, rho, grid, config.qO_N, stream)
    reps = range(config.repetitions)
    if threads == 1 or config.repetitions == 1:
        outcomes = _run_block(ctx, reps)
    else:
        size = math.ceil(config.repetitions / (threads * 4))
        blocks = [list(reps[i:i + size]) for i in range(0, config.repetitions, size)]
        with ProcessPoolExecutor(threads) as pool:
            outcomes = [o for part in pool.map(_run_block, [ctx] * len(blocks), blocks) for o in part]
    rows = [_aggregate(m.label, B, outcomes, config) for m in config.methods for B in m.B]
    return ExperimentReport(rows, config.to_dict(), truth, time.perf_counter() - start)


def _csv_cell(v):
    if isinstance(v, float):
        return "NA" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def report_to_dict(report):
    rows = []
    for r in report.rows:
        rows.append({k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in zip(CSV_HEADER, r.values())})
    return {"rows": rows, "config": report.config, "truth": report.truth}


def report_from_dict(doc):
    rows = []
    for d in doc["rows"]:
        vals = {k: (math.nan if d[k] is None else d[k]) for k in CSV_HEADER}
        rows.append(ReportRow(**vals))
    return ExperimentReport(rows, doc.get("config"), doc.get("truth"))


def format_report(report, fmt="csv"):
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in report.rows:
            writer.writerow([_csv_cell(v) for v in r.values()])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    raise DomainError(f"unknown format {fmt!r}; expected csv or json")


def emit_report(report, fmt="csv", destination=None):
    """Write the report as CSV or JSON to ``destination`` (a path, a file object, or stdout)."""
    text = format_report(report, fmt)
    if destination is None or destination == "-":
        sys.stdout.write(text)
    elif hasattr(destination, "write"):
        destination.write(text)
    else:
        try:
            with open(destination, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write report: {exc.strerror}", str(destination)) from None
    return text
