"""Command-line front end.

Sub-commands:
  run        simulate a scenario config (or a bundled scenario) and check it
  verify     re-run the estimate checks on stored trajectories
  calibrate  estimate the embedding/interpolation constants on an ensemble
  sweep      run a grid of scenario variants, optionally in parallel
"""

import argparse
import json
import os
import sys
from dataclasses import asdict

from . import estimates as est
from . import experiments as exp
from .grid import make_grid


def _add_common(p):
    p.add_argument("--config", help="path to a JSON scenario config")
    p.add_argument("--scenario", help="bundled scenario name")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", default="runs/out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusflow",
        description="periodic Navier-Stokes runs with executable "
                    "energy-estimate checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate and check a scenario")
    _add_common(p_run)
    p_run.add_argument("--dt-halving", action="store_true",
                       help="also run at dt/2 and report the margin "
                            "convergence constant")

    p_verify = sub.add_parser("verify",
                              help="re-check stored trajectories")
    p_verify.add_argument("--out", required=True,
                          help="existing experiment directory")

    p_cal = sub.add_parser("calibrate", help="constants ensemble")
    p_cal.add_argument("--N", type=int, default=16)
    p_cal.add_argument("--L", type=float, default=None,
                       help="box length (default 2*pi)")
    p_cal.add_argument("--ensemble", type=int, default=100)
    p_cal.add_argument("--seed", type=int, default=0)
    p_cal.add_argument("--out", default=None,
                       help="write constants JSON here (default stdout)")

    p_sweep = sub.add_parser("sweep", help="run scenario variants")
    p_sweep.add_argument("--config", required=True,
                         help="JSON config with a top-level 'sweep' list of "
                              "override objects")
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--out", default="runs/sweep")
    p_sweep.add_argument("--parallel", type=int, default=1,
                         help="concurrent experiments")
    return parser


def _load_spec(args) -> exp.ExperimentSpec:
    if args.config and args.scenario:
        raise exp.ConfigError("give either --config or --scenario, not both")
    if args.config:
        with open(args.config) as fh:
            spec = exp.parse_config(fh.read())
    elif args.scenario:
        spec = exp.bundled_scenario(args.scenario)
    else:
        raise exp.ConfigError("one of --config or --scenario is required")
    if args.seed is not None:
        spec.raw["seed"] = args.seed
    return spec


def _cmd_run(args) -> int:
    spec = _load_spec(args)
    artifacts = exp.run_experiment(spec, args.out)
    text, code = exp.emit_report(artifacts)
    sys.stdout.write(text)
    if args.dt_halving:
        fine = exp.ExperimentSpec(raw=dict(spec.raw))
        fine.raw["dt"] = spec.raw["dt"] / 2.0
        fine_arts = exp.run_experiment(fine, os.path.join(args.out, "half-dt"))
        C = margin_convergence_constant(artifacts.reports,
                                        fine_arts.reports, spec.raw["dt"])
        sys.stdout.write(f"dt-halving margin constant C = {C:.6e} "
                         f"(tol = C*dt^2 + {est.FLOAT_FLOOR:g})\n")
    return code


def margin_convergence_constant(coarse: dict, fine: dict, dt: float,
                                safety: float = 2.0) -> float:
    """Tolerance constant from a dt-halving pair of margin sets.

    The worst margins differ by ~ (3/4) C dt^2 for a second-order scheme;
    the returned C carries a safety factor.
    """
    diffs = [abs(coarse[k].worst_margin - fine[k].worst_margin)
             for k in coarse if k in fine]
    if not diffs:
        return 1.0
    return safety * max(diffs) / (0.75 * dt * dt)


def _cmd_verify(args) -> int:
    artifacts = exp.reverify(args.out)
    text, code = exp.emit_report(artifacts)
    sys.stdout.write(text)
    return code


def _cmd_calibrate(args) -> int:
    import math

    L = args.L if args.L is not None else 2.0 * math.pi
    grid = make_grid(L, args.N, 3)
    cal = est.calibrate_constants(grid, args.ensemble, args.seed)
    payload = json.dumps(asdict(cal), indent=2, sort_keys=True) + "\n"
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def _run_member(payload):
    # module-level so it pickles for the process pool
    raw, out_dir = payload
    spec = exp.ExperimentSpec(raw=raw)
    artifacts = exp.run_experiment(spec, out_dir)
    _, code = exp.emit_report(artifacts)
    return out_dir, code, artifacts.failed


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        full = json.load(fh)
    members = full.pop("sweep", None)
    if not members:
        raise exp.ConfigError("sweep config needs a nonempty 'sweep' list")
    jobs = []
    for i, overrides in enumerate(members):
        merged = json.loads(json.dumps(full))
        _deep_update(merged, overrides)
        if args.seed is not None:
            merged["seed"] = args.seed
        spec = exp.parse_config(json.dumps(merged))
        jobs.append((spec.raw, os.path.join(args.out, f"member_{i:03d}")))

    results = []
    if args.parallel > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            results = list(pool.map(_run_member, jobs))
    else:
        results = [_run_member(j) for j in jobs]

    worst = 0
    lines = ["member,exit_code,failed"]
    for out_dir, code, failed in results:
        lines.append(f"{out_dir},{code},{failed}")
        worst = max(worst, code)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "sweep.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    sys.stdout.write("\n".join(lines) + "\n")
    return worst


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "verify": _cmd_verify,
                "calibrate": _cmd_calibrate, "sweep": _cmd_sweep}
    try:
        return handlers[args.command](args)
    except exp.ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return exp.EXIT_ERROR
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exp.EXIT_ERROR


def _deep_update(target: dict, overrides: dict) -> None:
    for key, val in overrides.items():
        if isinstance(val, dict) and isinstance(target.get(key), dict):
            _deep_update(target[key], val)
        else:
            target[key] = val


if __name__ == "__main__":
    sys.exit(main())
