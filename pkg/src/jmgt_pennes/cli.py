"""Command line entry point ``jps``.

Exit codes: 0 success, 2 configuration, 3 degeneracy, 4 no contraction or
iteration cap, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import runner, verification
from .config import load_config
from .errors import JPSError


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jps", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log Picard iterations")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="solve one configuration")
    p.add_argument("config", type=Path)

    p = sub.add_parser("sweep-tau", help="compare tau runs against the tau = 0 reference")
    p.add_argument("config", type=Path)
    p.add_argument("--taus", type=float, nargs="+", required=True)

    p = sub.add_parser("converge", help="observed order over a halving dt sequence")
    p.add_argument("config", type=Path)
    p.add_argument("--dts", type=float, nargs="+", required=True)

    sub.add_parser("verify", help="run the built-in oracle suite")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.cmd == "verify":
            return 0 if verification.run_all() else 5
        cfg = load_config(args.config)
        out = cfg.output_dir()
        if args.cmd == "run":
            outcome = runner.run(cfg, out)
            rep = outcome.result.report
            print(f"converged in {len(rep)} iterations; artifacts in {outcome.directory}")
        elif args.cmd == "sweep-tau":
            rows = runner.sweep_tau(cfg, args.taus, out)
            print("tau, p_diff_LinfL2, theta_diff_LinfL2")
            for tau, dp, dth, _ in rows:
                print(f"{tau:.6g}, {dp:.6e}, {dth:.6e}")
        else:
            rows = runner.convergence_study(cfg, args.dts, directory=out)
            print("dt, error, order")
            for dt, err, order in rows:
                print(f"{dt:.6g}, {err:.6e}, {order}")
    except JPSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
