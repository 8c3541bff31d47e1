"""Command-line front end.

Subcommands mirror the library workflow:

    smclab validate  --model <file-or-name>
    smclab workspace --model <file-or-name> --samples <n> [--voxel m] [--out csv]
    smclab simulate  --scenario <file-or-name> --out <dir>
    smclab compare   --scenario <file-or-name> --controllers mbsmc,nmbsmc,pid --out <dir>
    smclab tune      --scenario <file-or-name> --controller <kind> --seed <u64> --out <dir>

Exit codes: 0 success, 1 validation/usage error, 2 divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_DIVERGED = 2


def _cmd_validate(args) -> int:
    from .robot_model import ModelError, load_model, validate_model

    try:
        model = load_model(args.model)
    except (ModelError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    problems = validate_model(model)
    if problems:
        for p in problems:
            print(f"invalid: {p}")
        return EXIT_INVALID
    print(f"model {model.name!r}: {model.n} joints, all invariants hold")
    return EXIT_OK


def _cmd_workspace(args) -> int:
    from .kinematics import occupied_voxels, workspace_positions
    from .robot_model import ModelError, load_model

    try:
        model = load_model(args.model)
    except (ModelError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    positions = workspace_positions(model, args.samples, rng_seed=args.seed)
    centers = occupied_voxels(positions, args.voxel)
    volume = centers.shape[0] * args.voxel ** 3
    print(f"model {model.name!r}: {args.samples} samples, "
          f"{centers.shape[0]} voxels of {args.voxel} m -> {volume:.4f} m^3")
    if args.out:
        np.savetxt(args.out, centers, delimiter=",", header="x,y,z",
                   comments="", fmt="%.6f")
        print(f"voxel centers written to {args.out}")
    return EXIT_OK


def _load_scenario_or_fail(name: str):
    from .harness import load_scenario
    from .robot_model import ModelError

    try:
        return load_scenario(name), None
    except (ModelError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None, EXIT_INVALID


def _cmd_simulate(args) -> int:
    from .harness import export_log, export_report, run_scenario
    from .metrics import compute_report, threshold_report
    from .robot_model import ModelError, load_model

    scenario, err = _load_scenario_or_fail(args.scenario)
    if scenario is None:
        return err
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kind = args.controller or scenario.controller
    try:
        log = run_scenario(scenario, controller=kind)
    except (ModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    export_log(log, out / f"{scenario.name}_{kind}_log.csv")
    model = load_model(scenario.model)
    if scenario.gravity_compensated:
        model = model.with_gravity((0.0, 0.0, 0.0))
    if log.diverged:
        print(f"run diverged at step {log.diverged_at} "
              f"(t={log.diverged_at * log.dt:.3f} s); truncated log written")
        return EXIT_DIVERGED
    report = compute_report(model, log)
    export_report(report, out / f"{scenario.name}_{kind}_metrics.json")
    compliance = threshold_report(report)
    print(f"{scenario.name} [{kind}]: rmse max {np.max(report.joint_rmse):.3e} rad, "
          f"effort {report.control_effort:.4g}")
    for metric, flags in compliance.items():
        state = "pass" if all(flags) else "FAIL"
        print(f"  threshold {metric}: {state}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    from .harness import compare_controllers, export_log

    scenario, err = _load_scenario_or_fail(args.scenario)
    if scenario is None:
        return err
    kinds = [k.strip() for k in args.controllers.split(",") if k.strip()]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        table = compare_controllers(scenario, kinds)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    table.to_csv(out / f"{scenario.name}_comparison.csv")
    code = EXIT_OK
    for kind, log in table.logs.items():
        export_log(log, out / f"{scenario.name}_{kind}_log.csv")
        report = table.reports[kind]
        if log.diverged:
            print(f"{kind}: DIVERGED at step {log.diverged_at}")
            code = EXIT_DIVERGED
        else:
            print(f"{kind}: rmse max {np.max(report.joint_rmse):.3e} rad, "
                  f"snap max {np.max(report.snap):.3e} rad/s^4, "
                  f"effort {report.control_effort:.4g}")
    print(f"comparison table: {out / (scenario.name + '_comparison.csv')}")
    return code


def _cmd_tune(args) -> int:
    from .tuning import (CostWeights, DEFAULT_BOUNDS, SwarmConfig,
                         history_to_csv, tune_controller)

    scenario, err = _load_scenario_or_fail(args.scenario)
    if scenario is None:
        return err
    if args.controller not in DEFAULT_BOUNDS:
        print(f"error: unknown controller {args.controller!r}", file=sys.stderr)
        return EXIT_INVALID
    lo, hi = DEFAULT_BOUNDS[args.controller]
    config = SwarmConfig(particle_count=args.particles, iterations=args.iterations,
                         bounds_lo=lo, bounds_hi=hi, rng_seed=args.seed)
    weights = CostWeights(w_rmse=args.w_rmse, w_smooth=args.w_smooth,
                          w_effort=args.w_effort)
    result = tune_controller(scenario, args.controller, weights, config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    history_to_csv(result, out / f"{scenario.name}_{args.controller}_tuning.csv")
    gains = result.gains
    if args.controller == "pid":
        doc = {"kp": float(gains.kp), "ki": float(gains.ki), "kd": float(gains.kd)}
    else:
        doc = {"p1": float(gains.p1), "p2": float(gains.p2), "p3": float(gains.p3)}
    gains_path = out / f"{scenario.name}_{args.controller}_gains.yaml"
    gains_path.write_text(yaml.safe_dump({args.controller: doc}, sort_keys=False))
    print(f"tuned {args.controller}: {doc}")
    print(f"cost {result.best_cost:.6g} (from {result.start_cost:.6g} at all-ones start)")
    print(f"gains -> {gains_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smclab",
                                     description="Manipulator sliding-mode control workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a robot model file")
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("workspace", help="Monte-Carlo workspace volume")
    p.add_argument("--model", required=True)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--voxel", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional CSV of occupied voxel centers")
    p.set_defaults(func=_cmd_workspace)

    p = sub.add_parser("simulate", help="run one scenario closed loop")
    p.add_argument("--scenario", required=True)
    p.add_argument("--controller", default=None, help="override the scenario controller")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="run several controllers on one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--controllers", default="mbsmc,nmbsmc,pid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("tune", help="PSO-tune controller gains on a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--controller", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--particles", type=int, default=30)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--w-rmse", type=float, default=1.0)
    p.add_argument("--w-smooth", type=float, default=0.01)
    p.add_argument("--w-effort", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_tune)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
