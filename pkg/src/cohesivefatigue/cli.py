"""Command-line entry point.

Subcommands:
  run <config>              run a scenario, write trajectory.csv + summary.json
  verify <config>           run + full audit, write audit.json (exit 5 on failure)
  sweep <config> --ks ...   refinement study over step counts, write refinement.csv
  oracle-compare <dump>     solver vs grid oracle on a problem dump, write CSV
  demo-fatigue <config>     cyclic run vs the scalar cycle map, write cycles CSV

<config> is a path or the name of a shipped scenario.  The environment
variable COHESIVE_OUT overrides the output directory root.

Exit codes: 0 success, 2 configuration error, 3 step-solver failure,
4 unstable initial state, 5 audit failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io as tio
from .evolution import EvolutionAborted, InitialNotStable, run
from .laws import CohesiveLaw, LawField
from .oracle import GridSpec, brute_force_step, scalar_fatigue_recursion
from .reduced import ReducedModel
from .scenario import (ConfigError, Scenario, parse_config, resolve_output_dir,
                       shipped_scenario_names, shipped_scenario_path)
from .stepsolve import StepProblem, solve_step
from .verifier import audit_trajectory, refinement_study

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_UNSTABLE = 4
EXIT_AUDIT = 5


def _resolve_config(arg: str) -> str:
    if os.path.exists(arg):
        return arg
    if arg in shipped_scenario_names():
        return shipped_scenario_path(arg)
    raise ConfigError(f"no such config file or shipped scenario: {arg!r}")


def _load_and_build(config_arg: str, out_override):
    scenario = parse_config(_resolve_config(config_arg))
    outdir = tio.ensure_dir(resolve_output_dir(scenario, out_override))
    mesh, model, laws, initial = scenario.build()
    return scenario, outdir, mesh, model, laws, initial


def _run_scenario(scenario: Scenario, model, laws, initial, outdir: str):
    traj = run(model, laws, scenario.load, scenario.steps, initial=initial,
               opts=scenario.solver)
    tio.write_trajectory_csv(traj, os.path.join(outdir, "trajectory.csv"))
    tio.write_summary_json(traj, scenario.name, os.path.join(outdir, "summary.json"))
    return traj


def cmd_run(args) -> int:
    scenario, outdir, _, model, laws, initial = _load_and_build(args.config, args.out)
    try:
        traj = _run_scenario(scenario, model, laws, initial, outdir)
    except EvolutionAborted as exc:
        if exc.partial is not None:
            tio.write_trajectory_csv(exc.partial, os.path.join(outdir, "trajectory.csv"))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"{scenario.name}: {traj.k} steps, final drift {traj.drift[-1]:.3e}, "
          f"outputs in {outdir}")
    return EXIT_OK


def cmd_verify(args) -> int:
    scenario, outdir, _, model, laws, initial = _load_and_build(args.config, args.out)
    try:
        traj = _run_scenario(scenario, model, laws, initial, outdir)
    except EvolutionAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.corrupt:
        step, node, delta = args.corrupt.split(",")
        traj.V[int(step), int(node)] += float(delta)
    report = audit_trajectory(traj, model, laws)
    report.to_json(os.path.join(outdir, "audit.json"))
    for line in report.summary_lines():
        print(line)
    if not report.passed:
        print("audit failed", file=sys.stderr)
        return EXIT_AUDIT
    print(f"audit passed; audit.json in {outdir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario, outdir, _, model, laws, initial = _load_and_build(args.config, args.out)
    try:
        ks = [int(s) for s in args.ks.split(",") if s]
    except ValueError:
        print("error: --ks must be a comma-separated list of integers", file=sys.stderr)
        return EXIT_CONFIG
    if not ks or any(k < 10 for k in ks):
        print("error: every sweep step count must be at least 10", file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = refinement_study(model, laws, scenario.load, ks, initial=initial,
                                 opts=scenario.solver)
    except EvolutionAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    table.to_csv(os.path.join(outdir, "refinement.csv"))
    print(f"k_ref = {table.reference_k}")
    for row in table.rows:
        print(f"k={row.k}: Vtheta_err={row.v_theta_err:.3e} jump_err={row.jump_err:.3e} "
              f"max|drift|={row.max_drift:.3e} eta={row.eta_k:.3e}")
    print(f"refinement.csv in {outdir}")
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    try:
        with open(args.dump) as f:
            doc = json.load(f)
        model = ReducedModel.synthetic(np.array(doc["S"]), np.array(doc["c_unit"]),
                                       float(doc["e0_unit"]), np.array(doc["weights"]))
        laws = LawField(tuple(CohesiveLaw(l["kind"], l["kappa"], l["scale"])
                              for l in doc["laws"]))
        problem = StepProblem(model=model, laws=laws, V_prev=np.array(doc["V"], dtype=float),
                              p=np.array(doc["p"], dtype=float), amp=float(doc["amp"]))
        g = doc["grid"]
        dz = np.broadcast_to(np.asarray(g["dz"], dtype=float), (model.m,)).copy()
        grid = GridSpec(lo=np.array(g["lo"], dtype=float), hi=np.array(g["hi"], dtype=float),
                        dz=dz, budget=int(g.get("budget", 100_000_000)))
    except (OSError, KeyError, ValueError, TypeError) as exc:
        print(f"error: bad problem dump: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sol = solve_step(problem)
    z_oracle, f_oracle = brute_force_step(problem, grid)
    outdir = tio.ensure_dir(args.out or os.environ.get("COHESIVE_OUT") or ".")
    path = os.path.join(outdir, "oracle_compare.csv")
    with open(path, "w") as f:
        f.write("quantity,solver,oracle,delta\n")
        for e in range(model.m):
            f.write(f"z_{e},{float(sol.z[e])!r},{float(z_oracle[e])!r},"
                    f"{float(sol.z[e] - z_oracle[e])!r}\n")
        f.write(f"F,{float(sol.total)!r},{float(f_oracle)!r},{float(sol.total - f_oracle)!r}\n")
    print(f"|F_solver - F_oracle| = {abs(sol.total - f_oracle):.3e}; table in {path}")
    return EXIT_OK


def _triangle_cycles(scenario: Scenario):
    """Peak amplitude and cycle-end times of a 0..A triangle-wave program."""
    bp = scenario.load.breakpoints
    amps = [a for _, a in bp]
    if len(bp) < 3 or len(bp) % 2 == 0:
        raise ConfigError("demo-fatigue needs a triangle-wave load (0, A, 0, A, ...)")
    peaks = amps[1::2]
    valleys = amps[0::2]
    A = peaks[0]
    if A <= 0.0 or any(a != A for a in peaks) or any(a != 0.0 for a in valleys):
        raise ConfigError("demo-fatigue needs a triangle-wave load oscillating between 0 and A")
    cycle_ends = [t for t, _ in bp[2::2]]
    return A, cycle_ends


def cmd_demo_fatigue(args) -> int:
    scenario, outdir, _, model, laws, initial = _load_and_build(args.config, args.out)
    A, cycle_ends = _triangle_cycles(scenario)
    if not laws.homogeneous:
        raise ConfigError("demo-fatigue compares against the scalar map; laws must be uniform")
    # effective scalar stiffness of the uniform opening mode
    ones = np.ones(model.m)
    s = float(ones @ model.S @ ones) / float(np.sum(model.weights))
    try:
        traj = _run_scenario(scenario, model, laws, initial, outdir)
    except EvolutionAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    rec = scalar_fatigue_recursion(laws[0], s, A, len(cycle_ends))
    kappa = laws[0].kappa
    path = os.path.join(outdir, "fatigue_cycles.csv")
    with open(path, "w") as f:
        f.write("cycle,t_end,V_evolution,V_recursion,gV_evolution,gV_recursion\n")
        for n, t_end in enumerate(cycle_ends):
            v_evo = float(traj.V[traj.state_at(t_end), 0])
            v_rec = rec.cycles[n].v_down if rec.slipped else 0.0
            f.write(f"{n + 1},{t_end!r},{v_evo!r},{v_rec!r},"
                    f"{laws[0].evaluate(v_evo)!r},{laws[0].evaluate(v_rec)!r}\n")
    if not rec.slipped:
        print("scalar map: the threshold is never reached, no slip (evolution should agree)")
    else:
        crossing = next((r.cycle for r in rec.cycles
                         if laws[0].evaluate(r.v_down) >= 0.9 * kappa), None)
        print(f"scalar map: g(V) first reaches 0.9 kappa at cycle {crossing}")
    print(f"per-cycle table in {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cohesive",
                                     description="quasistatic cohesive-fatigue solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run a scenario and audit the trajectory")
    p_verify.add_argument("config")
    p_verify.add_argument("--out", default=None)
    p_verify.add_argument("--corrupt", default=None, metavar="STEP,NODE,DELTA",
                          help="debug: perturb V before auditing to demonstrate audit power")
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="refinement study over step counts")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--ks", required=True, help="comma-separated step counts")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_oc = sub.add_parser("oracle-compare", help="solver vs grid oracle on a problem dump")
    p_oc.add_argument("dump")
    p_oc.add_argument("--out", default=None)
    p_oc.set_defaults(func=cmd_oracle_compare)

    p_df = sub.add_parser("demo-fatigue", help="cyclic run against the scalar cycle map")
    p_df.add_argument("config")
    p_df.add_argument("--out", default=None)
    p_df.set_defaults(func=cmd_demo_fatigue)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InitialNotStable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE


if __name__ == "__main__":
    sys.exit(main())
