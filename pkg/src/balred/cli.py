"""Command-line front end: ``balred sweep``, ``balred certify`` and ``balred hsv``.

Exit codes: 0 success, 2 bad input (config, files, dimensions), 3 numerical
failure, 4 unstable system with the infinite-horizon variant.
"""

import argparse
import hashlib
import json
import os
import sys

import numpy as np
import scipy.io

from . import __version__
from .balancing import RankError, balance
from .bench import BenchConfig, ConfigError, SweepError, rows_to_csv, run_sweep
from .bounds import Certifier
from .gramians import UnstableSystemError
from .linalg import DimensionError
from .lti import LtiSystem, ObservationGrid, SmoothingProblem
from .posterior import GaussianPrior

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_UNSTABLE = 0, 2, 3, 4

__all__ = ["main", "load_matrix", "write_manifest", "read_manifest", "verify_manifest"]


class InputError(ValueError):
    pass


def _err(msg):
    print(f"balred: {msg}", file=sys.stderr)


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def load_matrix(path):
    """Dense array from a Matrix Market file."""
    try:
        M = scipy.io.mmread(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read matrix {path}: {exc}") from None
    M = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
    if np.iscomplexobj(M):
        raise InputError(f"{path}: complex matrices are not supported")
    return np.asarray(M, dtype=float)


def load_vector(path):
    try:
        return np.atleast_1d(np.loadtxt(path, dtype=float, ndmin=1))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read vector {path}: {exc}") from None


def _fmt(v):
    if isinstance(v, float) or isinstance(v, np.floating):
        return repr(float(v))
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


# ---------------------------------------------------------------------------
# manifest

def write_manifest(path, subcommand, config_text, inputs, outputs, seed):
    """Plain ``key = value`` manifest; no timestamps, so reruns are byte-identical."""
    lines = [f"subcommand = {subcommand}", f"version = {__version__}", f"seed = {seed}"]
    for p in inputs:
        lines.append(f"input {os.path.basename(p)} = sha256:{sha256(p)}")
    for p in outputs:
        lines.append(f"output {os.path.basename(p)} = sha256:{sha256(p)}")
    lines.append("[config]")
    lines.extend(config_text.rstrip("\n").splitlines())
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_manifest(path):
    header, config = {}, []
    in_config = False
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line == "[config]":
                in_config = True
            elif in_config:
                config.append(line)
            elif line:
                key, value = line.split(" = ", 1)
                header[key] = value
    return header, "\n".join(config) + "\n"


def verify_manifest(path, directory):
    """Names of listed files whose current digest differs from the manifest."""
    header, _ = read_manifest(path)
    bad = []
    for key, value in header.items():
        kind, _, name = key.partition(" ")
        if kind in ("input", "output"):
            target = os.path.join(directory, name)
            if not os.path.exists(target) or f"sha256:{sha256(target)}" != value:
                bad.append(name)
    return bad


# ---------------------------------------------------------------------------
# subcommands

def _parse_overrides(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_sweep(args):
    try:
        overrides = _parse_overrides(args.set)
        if args.seed is not None:
            overrides["seed"] = str(args.seed)
        config = BenchConfig.load(args.config, overrides)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_INPUT
    try:
        rows = run_sweep(config)
    except SweepError as exc:
        _err(f"numerical failure at {exc}")
        return EXIT_NUMERIC
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))
    write_manifest(os.path.join(args.out, "manifest.txt"), "sweep", config.to_text(),
                   [args.config], [csv_path], config.seed)
    return EXIT_OK


def _load_problem(args, need_data):
    A = load_matrix(args.A)
    C = load_matrix(args.C)
    Geps = load_matrix(args.Geps)
    L = load_matrix(args.Lpr)
    system = LtiSystem(A, C, Geps)
    mean = load_vector(args.mean) if getattr(args, "mean", None) else np.zeros(L.shape[0])
    prior = GaussianPrior(mean, L)
    if prior.dim != system.d:
        raise DimensionError(f"prior factor has {prior.dim} rows, A is {system.d}x{system.d}")
    if not need_data:
        return system, prior, None
    grid = ObservationGrid.equidistant(args.dt, args.n, args.horizon)
    return system, prior, SmoothingProblem(system, grid, prior, load_vector(args.data))


def cmd_certify(args):
    try:
        if args.variant == "pdtlbt" and args.horizon is None:
            raise InputError("pdtlbt needs --horizon")
        system, prior, problem = _load_problem(args, need_data=True)
        realization = balance(system, prior.cov_factor, args.variant, args.horizon)
        model, bundle = realization.truncate(args.rank)
        report = Certifier(problem, p=np.inf if args.p == "inf" else 2).report(model, bundle)
    except UnstableSystemError as exc:
        _err(str(exc))
        return EXIT_UNSTABLE
    except (InputError, DimensionError, RankError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        _err(f"numerical failure: {type(exc).__name__}: {exc}")
        return EXIT_NUMERIC
    fields = report.as_dict()
    if args.json:
        print(json.dumps({k: (float(v) if isinstance(v, np.floating) else v) for k, v in fields.items()}))
    else:
        for key, value in fields.items():
            print(f"{key} = {_fmt(value)}")
    return EXIT_OK


def cmd_hsv(args):
    try:
        if args.variant == "pdtlbt" and args.horizon is None:
            raise InputError("pdtlbt needs --horizon")
        system, prior, _ = _load_problem(args, need_data=False)
        realization = balance(system, prior.cov_factor, args.variant, args.horizon)
    except UnstableSystemError as exc:
        _err(str(exc))
        return EXIT_UNSTABLE
    except (InputError, DimensionError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        _err(f"numerical failure: {type(exc).__name__}: {exc}")
        return EXIT_NUMERIC
    for s in realization.hsv:
        print(f"{s:.16e}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="balred", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="rank sweep on a synthetic benchmark")
    sw.add_argument("config")
    sw.add_argument("--out", required=True)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--set", action="append", metavar="KEY=VALUE")
    sw.set_defaults(func=cmd_sweep)

    def system_args(p):
        p.add_argument("A")
        p.add_argument("C")
        p.add_argument("Geps")
        p.add_argument("Lpr")
        p.add_argument("--variant", choices=("pdbt", "pdtlbt"), default="pdbt")
        p.add_argument("--horizon", type=float)

    ce = sub.add_parser("certify", help="bounds for one reduced model")
    system_args(ce)
    ce.add_argument("--dt", type=float, required=True)
    ce.add_argument("--n", type=int, required=True)
    ce.add_argument("--data", required=True)
    ce.add_argument("--mean", help="prior mean, one value per line (default zero)")
    ce.add_argument("--rank", type=int, required=True)
    ce.add_argument("--p", choices=("2", "inf"), default="2")
    ce.add_argument("--json", action="store_true")
    ce.set_defaults(func=cmd_certify)

    hs = sub.add_parser("hsv", help="Hankel singular values of the prior-driven system")
    system_args(hs)
    hs.set_defaults(func=cmd_hsv)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.func(args)
