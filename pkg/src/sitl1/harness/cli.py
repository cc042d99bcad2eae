"""Command line interface: ``sitl1 <command> ...``.

Matrices and vectors are plain CSV files without a header, one row per line.
Exit status is 0 on success, 2 for bad input or configuration and 3 when a
solver fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigError, EnumerationTooLarge, InvalidInput, SitError
from ..l1solve import SolverConfig
from ..oracle import DEFAULT_CAP, l0_oracle
from ..problem import Problem
from ..sit import detect, recover_underdetermined
from .config import load_config
from .example31 import run_example_3_1
from .runner import run_experiment, run_snbr_sweep, summarize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def read_matrix(path) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read matrix {path}: {exc}") from exc


def read_vector(path) -> np.ndarray:
    m = read_matrix(path)
    if min(m.shape) != 1:
        raise ConfigError(f"{path} holds a {m.shape[0]}x{m.shape[1]} matrix, expected a vector")
    return m.ravel()


def write_vector(path, v):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.asarray(v).reshape(-1, 1), delimiter=",", fmt="%.17g")


def _fmt(v):
    return ",".join(f"{x:.10g}" for x in np.ravel(v))


def _print_detection(det):
    print("support: " + " ".join(str(i) for i in det.support))
    print(f"l0_count: {det.l0_count}")
    print(f"lambda: {det.lam:.10g}")
    print(f"x_hat: {_fmt(det.x_hat)}")


def _solver(args) -> SolverConfig:
    return SolverConfig(max_iter=args.max_iter)


def cmd_detect(args):
    p = Problem(read_matrix(args.matrix), read_vector(args.y))
    det = detect(p, args.snbr, args.eps, args.seed, _solver(args), args.sigma)
    _print_detection(det)
    if args.out:
        write_vector(args.out, det.e_scaled)


def cmd_recover(args):
    det = recover_underdetermined(read_matrix(args.f), read_vector(args.y), args.snbr,
                                  args.eps, args.seed, _solver(args), args.sigma)
    _print_detection(det)
    print(f"e: {_fmt(det.e_scaled)}")
    if args.out:
        write_vector(args.out, det.e_scaled)


def cmd_oracle(args):
    p = Problem(read_matrix(args.matrix), read_vector(args.y))
    res = l0_oracle(p, args.cap)
    print(f"min_l0: {res.min_l0}")
    print(f"enumerated: {res.enumerated}")
    for sol in res.solutions:
        print("support: " + " ".join(str(i) for i in sol.support) + f"  x: {_fmt(sol.x)}")


def cmd_experiment(args):
    cfg = load_config(args.config)
    records = run_experiment(cfg, workers=args.workers)
    for row in summarize(records, cfg.methods):
        cert = row["certified_exact_rate"]
        extra = "" if cert is None else f"  certified_exact={cert:.3f}"
        print(f"{cfg.name} {row['method']:<10} exact={row['exact_rate']:.3f} "
              f"per_entry={row['per_entry_accuracy']:.3f} failures={row['failures']}{extra}")
    print(f"wrote {cfg.out_path}")


def cmd_sweep(args):
    cfg = load_config(args.config)
    res = run_snbr_sweep(cfg, args.snbr_values, workers=args.workers, out_path=args.out)
    print(json.dumps({"rates": {str(k): v for k, v in res["rates"].items()}, "knee": res["knee"]}))


def cmd_example31(args):
    report = run_example_3_1()
    for line in report.lines():
        print(line)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sitl1", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def search_opts(sp):
        sp.add_argument("--snbr", type=int, default=100, help="number of random candidates")
        sp.add_argument("--eps", type=float, default=0.2, help="soft-threshold level")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--sigma", type=float, default=0.0,
                        help="noise budget; > 0 switches to the denoising solver")
        sp.add_argument("--max-iter", type=int, default=200)
        sp.add_argument("--out", help="write the detected error vector here")

    sp = sub.add_parser("detect", help="sparse error detection for y = A x + e")
    sp.add_argument("--matrix", required=True, help="CSV file holding A")
    sp.add_argument("--y", required=True, help="CSV file holding y")
    search_opts(sp)
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("recover", help="sparsest e with F e = y_tilde")
    sp.add_argument("--f", required=True, help="CSV file holding the wide matrix F")
    sp.add_argument("--y", required=True, help="CSV file holding y_tilde")
    search_opts(sp)
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("oracle", help="exact l0 enumeration")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximum number of row subsets")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("experiment", help="run a configured experiment")
    sp.add_argument("--config", required=True, help="JSON file with the experiment fields")
    sp.add_argument("--workers", type=int, default=None, help="worker processes for trials")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("sweep", help="SIT exact rate against the number of candidates")
    sp.add_argument("--config", required=True)
    sp.add_argument("--snbr-values", type=int, nargs="+", default=[5, 10, 20, 40, 80])
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--out", help="CSV file for the rate curve")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("example31", help="reproduce the three-row worked example")
    sp.set_defaults(func=cmd_example31)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, InvalidInput, EnumerationTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SitError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
