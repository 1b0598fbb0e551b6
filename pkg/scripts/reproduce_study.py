#!/usr/bin/env python3
"""Run the full benchmark study matrix (all certificates, both coefficient
sweeps, and the radius maximization) and write summary.csv / summary.md.

This is the batch entry point behind `polycert reproduce`; expect a few
minutes of wall time.  The robust-certificate row at h_w = 0.03 reports NaN:
its disturbance aggregate is infeasible on this benchmark at every radius.
"""

import argparse
import sys

from polycert.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/reproduce")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--config", default=None,
                        help="optional TOML/JSON config overriding the defaults")
    args = parser.parse_args()
    argv = ["reproduce", "--out", args.out, "--seed", str(args.seed),
            "--jobs", str(args.jobs)]
    if args.config:
        argv += ["--config", args.config]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
