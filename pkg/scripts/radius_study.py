#!/usr/bin/env python3
"""Certified-radius comparison across certificates on the benchmark system.

Collects one experiment per seed, bisects the largest certifiable uniform
scaling for each certificate, and prints a small table.  Useful for eyeballing
the conservatism ordering without running the full reproduction matrix.
"""

import argparse
import time

from polycert import CertificateSpec, collect_experiment, maximize_radius
from polycert.presets import paper_box, paper_plant

CERTS = [("thm1", None), ("thm2", None), ("p1", None),
         ("thm3", "unstructured"), ("thm3", "structured"),
         ("thm3", "active_only"), ("thm4", None)]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0])
    parser.add_argument("--e1", type=float, default=-0.01)
    parser.add_argument("--e2", type=float, default=-0.005)
    parser.add_argument("--lam", type=float, default=1.0)
    parser.add_argument("--tol", type=float, default=5e-3)
    args = parser.parse_args()

    plant = paper_plant(args.e1, args.e2)
    template = paper_box(1.0)
    print(f"{'certificate':<22}{'seed':>6}{'r*':>10}{'time [s]':>10}")
    for seed in args.seeds:
        data = collect_experiment(plant, 20, polytope=template, seed=seed)
        spec = CertificateSpec(polytope=template, data=data,
                               remainder=plant.remainder, lam=args.lam)
        for cert, mode in CERTS:
            label = cert if mode is None else f"{cert}/{mode}"
            t0 = time.perf_counter()
            try:
                rr = maximize_radius(spec, cert, mode=mode, tol=args.tol)
                r_star = f"{rr.r_star:.4f}"
            except Exception as exc:  # noqa: BLE001 - report and continue
                r_star = type(exc).__name__[:9]
            print(f"{label:<22}{seed:>6}{r_star:>10}"
                  f"{time.perf_counter() - t0:>10.1f}")


if __name__ == "__main__":
    main()
