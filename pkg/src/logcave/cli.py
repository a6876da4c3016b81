"""Command-line interface: ``logcave <command> ...``.

Exit codes: 0 success, 2 bad input or arguments, 3 no maximizer exists for
the data, 4 solver failure, 5 verification failed.
"""

import argparse
import json
import math
import sys

import numpy as np

from .active_set import fit
from .density import PiecewiseLogLinear, WeightedSample
from .errors import ExistenceError, InputError, LogcaveError, SolverError
from .experiments import EXPERIMENTS, run_experiment
from .ica import ica_fit
from .projection import verify_characterization
from .radial import radial_fit
from .smoothing import smooth

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_EXISTENCE = 3
EXIT_SOLVER = 4
EXIT_VERIFY = 5


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


# -- input --------------------------------------------------------------------


def _read_text(path):
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def read_rows(path):
    """Parse comma-separated numeric rows; blank lines and '#' comments are skipped."""
    rows = []
    width = None
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            row = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise CliError(f"{path}:{lineno}: not a comma-separated list of numbers: {line!r}")
        if not all(math.isfinite(v) for v in row):
            raise CliError(f"{path}:{lineno}: non-finite value")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise CliError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
        rows.append(row)
    if not rows:
        raise CliError(f"{path}: no data")
    return np.array(rows)


def read_sample(path, weighted):
    data = read_rows(path)
    if weighted:
        if data.shape[1] != 2:
            raise CliError(f"{path}: --weights expects two columns (value, weight)")
        values, weights = data[:, 0], data[:, 1]
    else:
        if data.shape[1] != 1:
            raise CliError(f"{path}: expected one value per line (use --weights for two columns)")
        values, weights = data[:, 0], None
    try:
        return WeightedSample.from_data(values, weights)
    except InputError as exc:
        raise CliError(f"{path}: {exc}") from exc


def read_fit(path):
    try:
        obj = json.loads(_read_text(path))
        density = PiecewiseLogLinear(obj["knots"], obj["log_density"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"{path}: not a fit document ({exc})") from exc
    return density


def parse_grid(text):
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError("grid must be min:max:count")
    if count < 2 or not hi > lo:
        raise argparse.ArgumentTypeError("grid needs count >= 2 and max > min")
    return np.linspace(lo, hi, count)


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


# -- output -------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj):
    # float repr is the shortest string that round-trips exactly
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _emit(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _table(columns, rows, fmt):
    if fmt == "json":
        return dumps([dict(zip(columns, r)) for r in rows])
    lines = [",".join(columns)]
    lines += [",".join(repr(float(v)) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


# -- commands -----------------------------------------------------------------


def cmd_fit(args):
    report = fit(read_sample(args.input, args.weights), tol_kkt=args.tol_kkt)
    _emit(dumps(report.to_dict()), args.output)
    return EXIT_OK


def cmd_eval(args):
    d = read_fit(args.fit)
    x = args.grid
    rows = np.column_stack([x, d(x), d.cdf(x)])
    _emit(_table(["x", "f", "F"], rows, args.format), args.output)
    return EXIT_OK


def cmd_sample(args):
    d = read_fit(args.fit)
    draws = d.draw(args.count, seed=args.seed)
    _emit("".join(f"{v!r}\n" for v in draws.tolist()), args.output)
    return EXIT_OK


def cmd_smooth(args):
    report = fit(read_sample(args.input, args.weights), tol_kkt=args.tol_kkt)
    s = smooth(report)
    mean, var = s.moments()
    if args.grid is not None:
        x = args.grid
        _emit(_table(["x", "f"], np.column_stack([x, s(x)]), args.format), args.output)
    else:
        out = {"base": report.to_dict(), "bandwidth_var": s.bandwidth_var,
               "mean": mean, "variance": var}
        _emit(dumps(out), args.output)
    return EXIT_OK


def cmd_radial(args):
    rd = radial_fit(read_rows(args.input))
    out = {"dim": rd.dim, "c_d": rd.c_d, "log_c_d": rd.log_cd, "h": rd.fit.to_dict()}
    _emit(dumps(out), args.output)
    return EXIT_OK


def cmd_ica(args):
    model = ica_fit(read_rows(args.input), restarts=args.restarts, seed=args.seed)
    _emit(dumps(model.to_dict()), args.output)
    return EXIT_OK


def cmd_verify(args):
    d = read_fit(args.fit)
    sample = read_sample(args.input, args.weights)
    report = verify_characterization(d, sample.cdf(), tol=args.tol)
    _emit(dumps(report.to_dict()), args.output)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_reproduce(args):
    if args.experiment not in EXPERIMENTS:
        raise CliError(f"unknown experiment {args.experiment!r}; choose from: "
                       + ", ".join(EXPERIMENTS))
    result = run_experiment(args.experiment, seed=args.seed)
    print(result.line())
    if args.output is not None:
        _emit(dumps(result.to_dict()), args.output)
    return EXIT_OK if result.passed else EXIT_VERIFY


def build_parser():
    p = argparse.ArgumentParser(prog="logcave", description="Log-concave density estimation.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        if data:
            sp.add_argument("input", help="data file, or - for stdin")
            sp.add_argument("--weights", action="store_true",
                            help="input has a second column of weights")
        sp.add_argument("-o", "--output", help="output file (default stdout)")
        sp.add_argument("--tol-kkt", type=_positive, default=1e-8)
        sp.add_argument("--seed", type=int, default=0)
        return sp

    common(sub.add_parser("fit", help="fit the log-concave MLE")).set_defaults(func=cmd_fit)

    sp = common(sub.add_parser("eval", help="evaluate a fit on a grid"), data=False)
    sp.add_argument("fit")
    sp.add_argument("--grid", type=parse_grid, required=True, metavar="MIN:MAX:COUNT")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_eval)

    sp = common(sub.add_parser("sample", help="draw from a fit"), data=False)
    sp.add_argument("fit")
    sp.add_argument("-n", "--count", type=int, default=1000)
    sp.set_defaults(func=cmd_sample)

    sp = common(sub.add_parser("smooth", help="moment-matching smoothed fit"))
    sp.add_argument("--grid", type=parse_grid, metavar="MIN:MAX:COUNT")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_smooth)

    common(sub.add_parser("radial", help="radial estimate from d-column rows")).set_defaults(
        func=cmd_radial)

    sp = common(sub.add_parser("ica", help="log-concave ICA from d-column rows"))
    sp.add_argument("--restarts", type=int, default=10)
    sp.set_defaults(func=cmd_ica)

    sp = common(sub.add_parser("verify", help="check a fit against its data"), data=False)
    sp.add_argument("fit")
    sp.add_argument("input")
    sp.add_argument("--weights", action="store_true")
    sp.add_argument("--tol", type=_positive, default=1e-6)
    sp.set_defaults(func=cmd_verify)

    sp = common(sub.add_parser("reproduce", help="run a reproduction experiment"), data=False)
    sp.add_argument("experiment", help="one of: " + ", ".join(EXPERIMENTS))
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ExistenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXISTENCE
    except SolverError as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (LogcaveError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
