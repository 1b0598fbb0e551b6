"""Command-line workbench: synthesis, sweeps, radius maximization,
verification, simulation, and the full reproduction study.

Exit codes: 0 on success (certificate Optimal / study completed), 2 when the
certificate is infeasible, 1 on configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from .config import (ConfigError, RunConfig, build_plant, build_spec,
                      build_sweep_template, build_template_polytope)
from .plant import collect_experiment
from .polytope import enumerate_vertices, scale_facets
from .presets import PAPER_REPORTED
from .runtime import simulate_closed_loop
from .synthesis import (CertificateSpec, InfeasibleAtLowerBracketError,
                        InfeasibleAtZeroError, SweepTemplate, maximize_radius,
                        result_to_controller, sweep_coefficient, synth)
from .verify import monte_carlo_contractivity, plant_step_map


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for key in ("out", "seed", "jobs", "theorem", "mode", "radius", "verify_n",
                "boundary_frac", "steps"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if getattr(args, "lam", None) is not None:
        cfg.lam = args.lam
    if getattr(args, "hw", None) is not None:
        cfg.h_w = args.hw
    if getattr(args, "which", None) is not None:
        cfg.sweep_which = args.which
    cfg.__post_init__()
    return cfg


def _write_json(path: str, payload: dict) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return ""
    return np.format_float_positional(float(v), unique=True)


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    spec, _ = build_spec(cfg)
    spec.solver.diagnose = True
    res = synth(spec, cfg.certificate, mode=cfg.mode, jobs=cfg.jobs)
    payload = res.to_dict(spec)
    payload["radius"] = cfg.radius
    _write_json(os.path.join(cfg.out, "result.json"), payload)
    label = f"{cfg.certificate}/{cfg.mode}" if cfg.theorem == "3" else cfg.certificate
    print(f"{label} at r={cfg.radius}: {res.status}"
          + (f", objective {res.objective:.6g}" if res.objective is not None else ""))
    if res.infeasible_groups:
        print(f"constraint groups needing slack: {', '.join(res.infeasible_groups)}")
    return 0 if res.optimal else 2


def cmd_rmax(args) -> int:
    cfg = _load_config(args)
    spec, _ = build_spec(cfg, radius=1.0)
    try:
        rr = maximize_radius(spec, cfg.certificate, mode=cfg.mode,
                             bracket=cfg.bracket, tol=cfg.bisect_tol,
                             jobs=cfg.jobs, verify_n=cfg.verify_n,
                             boundary_frac=cfg.boundary_frac,
                             verify_seed=cfg.verify_seed)
    except InfeasibleAtLowerBracketError as exc:
        print(f"infeasible at lower bracket: {exc}")
        return 2
    payload = rr.result.to_dict(dataclasses.replace(
        spec, polytope=scale_facets(build_template_polytope(cfg), rr.r_star)))
    payload["r_star"] = rr.r_star
    payload["history"] = [[r, bool(ok)] for r, ok in rr.history]
    _write_json(os.path.join(cfg.out, "result.json"), payload)
    label = f"{cfg.certificate}/{cfg.mode}" if cfg.theorem == "3" else cfg.certificate
    print(f"{label}: r* = {rr.r_star:.4f}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    template = build_sweep_template(cfg)
    try:
        sw = sweep_coefficient(template, cfg.sweep_which, cfg.certificate,
                               mode=cfg.mode, bracket=cfg.sweep_bracket,
                               tol=cfg.sweep_tol, jobs=cfg.jobs,
                               verify_n=cfg.verify_n,
                               boundary_frac=cfg.boundary_frac,
                               verify_seed=cfg.verify_seed)
    except InfeasibleAtZeroError as exc:
        print(f"infeasible at zero coefficient: {exc}")
        return 2
    os.makedirs(cfg.out, exist_ok=True)
    rows = ["coefficient,feasible,objective"]
    for mag, ok, obj in sw.history:
        rows.append(f"{_fmt(mag)},{int(ok)},{_fmt(obj)}")
    with open(os.path.join(cfg.out, "sweep.csv"), "w") as fh:
        fh.write("\n".join(rows) + "\n")
    _write_json(os.path.join(cfg.out, "sweep.json"),
                {"which": cfg.sweep_which, "magnitude": sw.magnitude,
                 "certificate": cfg.certificate, "mode": cfg.mode})
    print(f"{cfg.certificate}/{cfg.mode} {cfg.sweep_which}-sweep: |e|* = {sw.magnitude:.4f}")
    return 0


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    result_path = args.result or os.path.join(cfg.out, "result.json")
    with open(result_path) as fh:
        payload = json.load(fh)
    if payload.get("status") != "optimal":
        print(f"stored result is {payload.get('status')}; nothing to verify")
        return 2
    controller, P, _ = result_to_controller(payload)
    plant = build_plant(cfg)
    report = monte_carlo_contractivity(
        P, plant_step_map(plant, controller, P), payload["lambda"],
        n_samples=cfg.verify_n, boundary_frac=cfg.boundary_frac,
        seed=cfg.verify_seed)
    _write_json(os.path.join(cfg.out, "report.json"), report.to_dict())
    print(f"verification: {'PASS' if report.passed else 'FAIL'} "
          f"({report.samples} samples, {len(report.violations)} violations)")
    return 0 if report.passed else 2


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    result_path = args.result or os.path.join(cfg.out, "result.json")
    with open(result_path) as fh:
        payload = json.load(fh)
    if payload.get("status") != "optimal":
        print(f"stored result is {payload.get('status')}; nothing to simulate")
        return 2
    controller, P, _ = result_to_controller(payload)
    plant = build_plant(cfg)
    traj_dir = os.path.join(cfg.out, "trajectories")
    os.makedirs(traj_dir, exist_ok=True)
    vs = enumerate_vertices(P)
    exits = 0
    for i, v in enumerate(vs.vertices):
        traj = simulate_closed_loop(plant, controller, P, v, cfg.steps,
                                    seed=cfg.seed + i)
        traj.to_csv(os.path.join(traj_dir, f"vertex_{i}.csv"))
        exits += traj.violated_at is not None
    print(f"simulated {len(vs)} vertex trajectories, {exits} exits")
    return 0 if exits == 0 else 2


def cmd_reproduce(args) -> int:
    cfg = _load_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    template = build_template_polytope(cfg)
    rows = []
    for theorem, mode in cfg.reproduce_certificates:
        cert = {"1": "thm1", "2": "thm2", "p1": "p1", "3": "thm3",
                "4": "thm4"}[str(theorem)]
        hw = cfg.reproduce_hw if cert == "thm4" else 0.0
        reported = PAPER_REPORTED.get((cert, mode), (None, None, None))
        row = {"certificate": cert, "mode": mode or "", "h_w": hw,
               "e1_reported": reported[0], "e2_reported": reported[1],
               "r_reported": reported[2]}

        def plant_builder(e1, e2, _hw=hw):
            return build_plant(dataclasses.replace(cfg, h_w=_hw), e1=e1, e2=e2)

        for which, fixed in (("e1", {"e2": -0.005}), ("e2", {"e1": -0.01})):
            if which not in cfg.reproduce_studies:
                row[f"{which}_measured"] = None
                row[f"{which}_time_s"] = None
                continue
            tmpl = SweepTemplate(
                plant_builder=plant_builder,
                e1=fixed.get("e1", -0.01), e2=fixed.get("e2", -0.005),
                polytope=scale_facets(template, 0.5), T=cfg.T, seed=cfg.seed,
                lam=cfg.lam)
            t0 = time.perf_counter()
            try:
                sw = sweep_coefficient(tmpl, which, cert, mode=mode,
                                       bracket=cfg.sweep_bracket,
                                       tol=cfg.sweep_tol, jobs=cfg.jobs,
                                       verify_n=cfg.verify_n,
                                       boundary_frac=cfg.boundary_frac)
                row[f"{which}_measured"] = sw.magnitude
            except InfeasibleAtZeroError:
                row[f"{which}_measured"] = float("nan")
            row[f"{which}_time_s"] = time.perf_counter() - t0

        if "rmax" in cfg.reproduce_studies:
            plant = plant_builder(-0.01, -0.005)
            data = collect_experiment(plant, cfg.T, polytope=template,
                                      seed=cfg.seed)
            spec = CertificateSpec(polytope=template, data=data,
                                   remainder=plant.remainder, lam=cfg.lam)
            t0 = time.perf_counter()
            try:
                rr = maximize_radius(spec, cert, mode=mode,
                                     bracket=cfg.bracket, tol=cfg.bisect_tol,
                                     jobs=cfg.jobs, verify_n=cfg.verify_n,
                                     boundary_frac=cfg.boundary_frac)
                row["r_measured"] = rr.r_star
            except InfeasibleAtLowerBracketError:
                row["r_measured"] = float("nan")
            row["r_time_s"] = time.perf_counter() - t0
        else:
            row["r_measured"] = None
            row["r_time_s"] = None
        rows.append(row)

    columns = ["certificate", "mode", "h_w",
               "e1_reported", "e1_measured", "e2_reported", "e2_measured",
               "r_reported", "r_measured", "e1_time_s", "e2_time_s", "r_time_s"]
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(
            str(row[c]) if c in ("certificate", "mode") else _fmt(row[c])
            for c in columns))
    with open(os.path.join(cfg.out, "summary.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")

    md = ["| certificate | mode | |e1|* (reported) | |e2|* (reported) | r* (reported) | time [s] |",
          "|---|---|---|---|---|---|"]
    for row in rows:
        total = sum(row[k] or 0.0 for k in ("e1_time_s", "e2_time_s", "r_time_s")
                    if row[k] is not None)

        def cell(meas, rep):
            m = "-" if row[meas] is None or (isinstance(row[meas], float)
                                             and not np.isfinite(row[meas])) \
                else f"{row[meas]:.3g}"
            r = "-" if row[rep] is None else f"{row[rep]:.3g}"
            return f"{m} ({r})"

        md.append(f"| {row['certificate']} | {row['mode']} | "
                  f"{cell('e1_measured', 'e1_reported')} | "
                  f"{cell('e2_measured', 'e2_reported')} | "
                  f"{cell('r_measured', 'r_reported')} | {total:.1f} |")
    with open(os.path.join(cfg.out, "summary.md"), "w") as fh:
        fh.write("\n".join(md) + "\n")
    print("\n".join(md))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="polycert",
        description="Data-driven synthesis of contractive-set state feedback")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("synth", cmd_synth), ("rmax", cmd_rmax),
                     ("sweep", cmd_sweep), ("verify", cmd_verify),
                     ("simulate", cmd_simulate), ("reproduce", cmd_reproduce)):
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML or JSON run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--theorem", choices=["1", "2", "p1", "3", "4"])
        p.add_argument("--mode",
                       choices=["unstructured", "structured", "active_only"])
        p.add_argument("--hw", type=float)
        p.add_argument("--radius", type=float)
        p.add_argument("--verify-n", dest="verify_n", type=int)
        p.add_argument("--boundary-frac", dest="boundary_frac", type=float)
        p.add_argument("--steps", type=int)
        if name == "sweep":
            p.add_argument("--which", choices=["e1", "e2"])
        if name in ("verify", "simulate"):
            p.add_argument("--result", help="path to result.json")
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
