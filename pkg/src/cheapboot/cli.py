"""Command-line interface: ``cheapboot {ci,coverage,qtable,halfwidth,zeta}``.

Exit codes: 0 on success, 2 for usage or configuration errors, 3 for
statistical errors such as too few resamples for the chosen method.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from . import rng
from .analytics import (
    CumulantCoefficients,
    Polynomial,
    build_p1,
    build_p2,
    halfwidth_table,
    zeta_one_sided,
    zeta_two_sided,
)
from .baselines import basic_bootstrap_interval, percentile_bootstrap_interval, se_bootstrap_interval
from .cheap import (
    ResampleSummary,
    cheap_interval,
    cheap_one_sided,
    cheap_region,
    cheap_se_interval,
    evaluate,
    resample_estimates,
)
from .errors import CheapBootError, ConfigError, DomainError, InsufficientResamples, StatisticalError
from .harness import ExperimentConfig, default_threads, emit_report, run_experiment
from .nested import ThetaGrid, q_M, solve_qO
from .rng import RandomStream, stream_id
from .scenarios import parse_estimator
from .subsampling import SubsamplePlan, subsample_interval, subsample_size, subsample_summary

log = logging.getLogger(__name__)

DEFAULT_SEED = 12345
CI_METHODS = ("cheap", "basic", "percentile", "se", "cheap-se", "cheap-upper", "cheap-lower", "region", "mn", "blb", "sdb")
_MIN_B = {"basic": 2, "percentile": 2, "se": 2}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # raise instead of exiting so main() owns the exit code
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _seed(text):
    value = int(text, 10)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser():
    parser = _Parser(prog="cheapboot", description="Cheap bootstrap intervals and coverage experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, B_help="number of resamples"):
        p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--out", default="-", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--B", type=_int_list, help=B_help)

    p = sub.add_parser("ci", help="one interval from a data file")
    common(p)
    p.add_argument("--data", required=True, help="one observation per line, comma-separated components")
    p.add_argument("--estimator", default="mean", help="e.g. mean, variance, correlation, quantile:0.6, ols:1")
    p.add_argument("--method", choices=CI_METHODS, default="cheap")
    p.add_argument("--s", type=int, help="subsample size for mn/blb/sdb")
    p.add_argument("--gamma", type=float, default=0.6, help="s = ceil(n**gamma) when --s is absent")

    p = sub.add_parser("coverage", help="run a coverage experiment from a JSON config")
    common(p, "override the B list of every method")
    p.add_argument("--config", required=True)
    p.add_argument("--reps", type=int)
    p.add_argument("--method", action="append", help="keep only these method labels (repeatable)")
    p.add_argument("--threads", type=int)
    # seed and alpha come from the config unless given
    p.set_defaults(seed=None, alpha=None)

    p = sub.add_parser("qtable", help="critical values q_O and q_M for nested intervals")
    common(p, "comma-separated B values (default 1,2,3,5,10,20)")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--N", type=int, default=100_000)
    p.add_argument("--grid", choices=("fast", "paper"), default="fast")
    p.add_argument("--method", choices=("sup", "paper-grid"), default="sup")
    p.add_argument("--threads", type=int)

    p = sub.add_parser("halfwidth", help="mean and sd of the cheap half-width")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--Bmax", type=int, default=20)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("zeta", help="Monte Carlo Edgeworth coverage coefficient")
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--side", choices=("two", "upper", "lower"), default="two")
    p.add_argument("--p", type=_float_list, help="coefficients c0,c1,... of p")
    p.add_argument("--q", type=_float_list, help="coefficients c0,c1,... of q")
    p.add_argument("--k", type=_float_list, help="k12,k31,k22,k41 used to build p")
    p.add_argument("--kq", type=_float_list, help="k12,k31,k22,k41 used to build q")
    p.add_argument("--N", type=int, default=100_000)
    p.add_argument("--threshold", type=float, help="override the critical value (inf allowed)")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _write(text, out):
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _table(header, rows, fmt):
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def read_data(path):
    """Plain text, one observation per line, comma-separated components; blank and ``#`` lines skipped."""
    rows = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    rows.append([float(v) for v in line.split(",")])
                except ValueError:
                    raise ConfigError(f"line {lineno}: not a number list: {line!r}", str(path)) from None
    except OSError as exc:
        raise ConfigError(f"cannot read data: {exc.strerror}", str(path)) from None
    if not rows:
        raise ConfigError("no observations", str(path))
    if len({len(r) for r in rows}) != 1:
        raise ConfigError("rows have differing numbers of components", str(path))
    data = np.array(rows)
    return data[:, 0] if data.shape[1] == 1 else data


def cmd_ci(args):
    if args.B is None or len(args.B) != 1:
        raise UsageError("ci needs exactly one --B value")
    B = args.B[0]
    method = args.method
    required = _MIN_B.get(method, 1)
    if B < required:
        raise InsufficientResamples(method, B, required)
    data = read_data(args.data)
    estimator = parse_estimator(args.estimator)
    stream = RandomStream(args.seed, stream_id(0, rng.ROLE_RESAMPLE))
    n = len(data)
    if method in ("mn", "blb", "sdb"):
        s = args.s if args.s is not None else subsample_size(n, args.gamma)
        summary = subsample_summary(data, estimator, SubsamplePlan(method, s, n, B), stream)
        iv = subsample_interval(summary, args.alpha)
        psi_hat = summary.psi_hat
    else:
        psi_hat = evaluate(estimator, data)
        summary = ResampleSummary(psi_hat, resample_estimates(data, estimator, B, stream), n)
        if method == "region":
            region = cheap_region(summary, args.alpha)
            row = {
                "method": "region", "B": B, "alpha": args.alpha,
                "center": region.center.tolist(), "scatter": region.scatter.tolist(),
                "threshold": region.threshold,
            }
            _write(json.dumps(row, indent=2) + "\n", args.out)
            return 0
        iv = {
            "cheap": lambda: cheap_interval(summary, args.alpha),
            "basic": lambda: basic_bootstrap_interval(summary, args.alpha),
            "percentile": lambda: percentile_bootstrap_interval(summary, args.alpha),
            "se": lambda: se_bootstrap_interval(summary, args.alpha),
            "cheap-se": lambda: cheap_se_interval(summary, args.alpha),
            "cheap-upper": lambda: cheap_one_sided(summary, args.alpha, "upper"),
            "cheap-lower": lambda: cheap_one_sided(summary, args.alpha, "lower"),
        }[method]()
    header = ["method", "B", "alpha", "estimate", "lower", "upper", "degenerate"]
    row = [iv.method, B, args.alpha, float(psi_hat), iv.lower, iv.upper, iv.degenerate]
    _write(_table(header, [row], args.format), args.out)
    return 0


def cmd_coverage(args):
    config = ExperimentConfig.load(args.config)
    doc = config.to_dict()
    if args.reps is not None:
        doc["repetitions"] = args.reps
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.alpha is not None:
        doc["alpha"] = args.alpha
    if args.B is not None:
        for m in doc["methods"]:
            m["B"] = list(args.B)
    if args.method:
        doc["methods"] = [m for m in doc["methods"] if m.get("label", m["tag"]) in args.method]
    config = ExperimentConfig.from_dict(doc)
    threads = args.threads if args.threads is not None else default_threads()
    report = run_experiment(config, threads)
    emit_report(report, args.format, args.out)
    log.info("coverage run took %.1f s", report.runtime_seconds)
    return 0


def cmd_qtable(args):
    Bs = args.B or [1, 2, 3, 5, 10, 20]
    grid = ThetaGrid.named(args.grid)
    threads = args.threads if args.threads is not None else default_threads()
    rows = []
    for B in Bs:
        stream = RandomStream(args.seed, stream_id(B, rng.ROLE_PIVOT))
        qO = solve_qO(B, args.alpha, args.rho, grid, args.N, stream, method=args.method, threads=threads)
        qm = q_M(B, args.alpha, args.rho) if B >= 2 else math.nan
        rows.append([B, args.alpha, args.rho, qO, qm, args.N, args.seed])
    header = ["B", "alpha", "rho", "q_O", "q_M", "N", "seed"]
    if args.format == "csv":
        rows = [[("NA" if isinstance(v, float) and math.isnan(v) else v) for v in r] for r in rows]
    else:
        rows = [[(None if isinstance(v, float) and math.isnan(v) else v) for v in r] for r in rows]
    _write(_table(header, rows, args.format), args.out)
    return 0


def cmd_halfwidth(args):
    rows = [list(r) for r in halfwidth_table(args.Bmax, args.alpha)]
    _write(_table(["B", "mean", "inflation_pct", "sd"], rows, args.format), args.out)
    return 0


def _poly(coeffs, ks, builder):
    if coeffs is not None and ks is not None:
        raise UsageError("give either coefficients or cumulants for each polynomial, not both")
    if ks is not None:
        if len(ks) != 4:
            raise UsageError("cumulants are k12,k31,k22,k41")
        return builder(CumulantCoefficients(*ks))
    return Polynomial(tuple(coeffs) if coeffs else (0.0,))


def cmd_zeta(args):
    builder = build_p2 if args.side == "two" else build_p1
    p = _poly(args.p, args.k, builder)
    q = _poly(args.q, args.kq, builder)
    stream = RandomStream(args.seed, stream_id(args.B, rng.ROLE_ZETA))
    if args.side == "two":
        z = zeta_two_sided(args.B, args.alpha, p, q, args.N, stream, threshold=args.threshold)
    else:
        z = zeta_one_sided(args.B, args.alpha, p, q, args.side, args.N, stream, threshold=args.threshold)
    header = ["B", "alpha", "side", "estimate", "std_error", "N", "seed"]
    _write(_table(header, [[args.B, args.alpha, args.side, z.estimate, z.std_error, z.N, args.seed]], args.format), args.out)
    return 0


COMMANDS = {"ci": cmd_ci, "coverage": cmd_coverage, "qtable": cmd_qtable, "halfwidth": cmd_halfwidth, "zeta": cmd_zeta}


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if not argv:
            raise UsageError(parser.format_help())
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 2
    except (ConfigError, DomainError) as exc:
        print(f"cheapboot: error: {exc}", file=sys.stderr)
        return 2
    except StatisticalError as exc:
        print(f"cheapboot: statistical error: {exc}", file=sys.stderr)
        return 3
    except CheapBootError as exc:
        print(f"cheapboot: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cheapboot: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
