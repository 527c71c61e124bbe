"""Command-line harness: ``phiminimal {verify,certify,cones,no4d,km,all}``."""
from __future__ import annotations

import argparse
import sys

from .config import COMMANDS, ConfigError, load_config
from .suites import run_command

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phiminimal",
                                     description="Numerical verification suites for the anisotropic minimal graph.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "verify": "Euler-Lagrange residuals, fixed points, wave identity, Legendre duality",
        "certify": "uniform ellipticity, seam regularity and axis charts of the integrand",
        "cones": "calibration, level-set criticality, foliation and the rescaling sweep",
        "no4d": "exploratory: four-dimensional ODE obstruction",
        "km": "exploratory: ellipticity failure of the k=1, m=4 family",
        "all": "every suite",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        p.add_argument("--samples", type=int, help="replace every sample size by this value")
        p.add_argument("--out", help="report path (default report.json)")
        p.add_argument("--tolerance-scale", type=float, help="multiply every tolerance by this factor")
        if name == "certify":
            p.add_argument("--integrand", choices=("phi", "km14_candidate", "round"),
                           help="integrand to certify (default phi)")
            p.add_argument("--round-dim", type=int, help="ambient dimension for the round integrand")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, command=args.command, seed=args.seed, samples=args.samples, out=args.out,
                          tolerance_scale=args.tolerance_scale, integrand=getattr(args, "integrand", None),
                          round_dim=getattr(args, "round_dim", None))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run_command(cfg, progress=lambda line: print(line, file=sys.stderr))
    try:
        written = report.write(cfg.out)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in written:
        print(path)
    if not report.passed:
        print("failing suites: " + ", ".join(report.failing), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
