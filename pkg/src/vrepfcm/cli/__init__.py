"""Batch command-line front end.

Every run writes ``report.json`` into ``--out``; failures exit nonzero
with a machine-readable error category:

    0 ok, 2 config error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import traceback

from .config import ConfigError, Context, InputError, check_files, load_config
from .report import RunReport

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

_NEEDS_CONFIG = {"fit-material", "membership", "solve", "convergence", "homogenize", "table build", "sweep", "tessellate"}


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON analysis configuration")
    common.add_argument("--out", default="out", help="output directory (created if missing)")
    common.add_argument("--engine", choices=("inverse", "ray"), help="membership engine override")
    common.add_argument("--seed", type=_u64, help="random seed (default: config seed or 0)")
    common.add_argument("--threads", type=int, help="BLAS / factorization thread limit")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="vrepfcm", description="Finite cell analysis on trivariate spline models.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("fit-material", parents=[common], help="least-squares material channel fit")
    m = sub.add_parser("membership", parents=[common], help="classify points against a model")
    m.add_argument("--cross-check", action="store_true", help="run both engines and report disagreement")
    sub.add_parser("solve", parents=[common], help="elastic, heat or thermo-elastic analysis")
    sub.add_parser("convergence", parents=[common], help="energy error versus polynomial degree")
    sub.add_parser("homogenize", parents=[common], help="effective tensor of a periodic unit cell")
    t = sub.add_parser("table", help="effective-tensor lookup tables")
    tsub = t.add_subparsers(dest="action", required=True)
    tsub.add_parser("build", parents=[common])
    q = tsub.add_parser("query", parents=[common])
    q.add_argument("--table", help="table JSON file")
    q.add_argument("--diameter", required=True, help='rod diameter, e.g. "0.3 mm" (bare numbers: mm)')
    q.add_argument("--angle", required=True, help='rotation angle, e.g. "30 deg" (bare numbers: deg)')
    r = sub.add_parser("rotate-tensor", parents=[common], help="rotate a Voigt tensor about z")
    r.add_argument("--tensor", help="6x6 text or JSON tensor file")
    r.add_argument("--angle", help='rotation angle, e.g. "90 deg"')
    sub.add_parser("sweep", parents=[common], help="vary beta, q or octree depth")
    ts = sub.add_parser("tessellate", parents=[common], help="watertight STL boundary")
    ts.add_argument("--resolution", type=int, help="samples per knot span")
    return ap


def _category(exc: BaseException) -> tuple[str, int]:
    from ..fcm import NumericalError
    from ..units import UnitError

    if isinstance(exc, (ConfigError, UnitError)):
        return "config", EXIT_CONFIG
    if isinstance(exc, (InputError, OSError)):
        return "io", EXIT_IO
    if isinstance(exc, (NumericalError, ArithmeticError, ValueError)):
        return "numerical", EXIT_NUMERICAL
    return "internal", EXIT_NUMERICAL


def run(args) -> int:
    from .commands import COMMANDS

    name = args.command if args.command != "table" else f"table {args.action}"
    report = RunReport(name, args.config)
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        print(json.dumps({"category": "io", "message": f"cannot create {args.out}: {exc.strerror}"}), file=sys.stderr)
        return EXIT_IO
    code = EXIT_OK
    try:
        if args.config:
            cfg, base = load_config(args.config)
        elif name in _NEEDS_CONFIG:
            raise ConfigError(f"{name} requires --config")
        else:
            cfg, base = {}, os.getcwd()
        check_files(cfg, base)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        report.seed = seed
        extra = {k: getattr(args, k, None) for k in ("cross_check", "table", "diameter", "angle", "tensor", "resolution")}
        ctx = Context(cfg, base, seed, args.engine, args.threads, extra)
        if args.threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                code = COMMANDS[name](ctx, report, args.out)
        else:
            code = COMMANDS[name](ctx, report, args.out)
        report.status = "ok"
    except Exception as exc:  # every failure still produces a report
        category, code = _category(exc)
        report.fail(category, str(exc), code)
        if args.verbose or category == "internal":
            traceback.print_exc()
        print(f"error [{category}]: {exc}", file=sys.stderr)
    try:
        report.write(args.out)
    except OSError as exc:
        print(f"error [io]: cannot write report: {exc.strerror}", file=sys.stderr)
        return code or EXIT_IO
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
