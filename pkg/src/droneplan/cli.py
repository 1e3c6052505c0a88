"""Command-line entry point.

Subcommands:
  validate    parse a scenario file and echo the effective parameters
  solve       build and solve one planning problem, write the schedule
  rollout     simulate one policy over seeds, write trace CSVs
  compare     paired rollouts across policies, write summary + trace CSVs
  export-lp   write a planning problem in LP text format

Exit codes: 0 success, 1 parse/validation error, 2 solver gave up within
the time limit without any feasible point.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import lp_io, problems, sim, solar, solver
from .errors import DronePlanError, ParseError, ValidationError
from .scenario import Scenario, baseline_scenario, load_scenario
from .solar import REProcess


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="droneplan",
        description="Plan solar-drone base station trips and micro-BS on/off "
                    "schedules; simulate and compare planning policies.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", help="scenario JSON file "
                       "(default: built-in baseline)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="root random seed")
        p.add_argument("--time-limit-s", type=float, default=300.0)
        p.add_argument("--tree-cap", type=int, default=solar.DEFAULT_TREE_CAP)
        p.add_argument("--sampled-scenarios", type=int, default=8,
                       help="sampled-subset size when the full tree exceeds the cap")
        p.add_argument("--uncertainty-pct", type=float, default=None,
                       help="override: two-point deviation in percent")

    p = sub.add_parser("validate", help="check a scenario file")
    common(p)

    p = sub.add_parser("solve", help="solve one planning problem")
    common(p)
    p.add_argument("--case", choices=["zero", "perfect", "partial"],
                   required=True)
    p.add_argument("--slot", type=int, default=1,
                   help="slot to plan in the zero-knowledge case")

    p = sub.add_parser("rollout", help="simulate one policy")
    common(p)
    p.add_argument("--case", choices=["zero", "perfect", "partial"],
                   required=True)
    p.add_argument("--seeds", type=int, default=1, help="number of seeds")

    p = sub.add_parser("compare", help="paired rollouts across policies")
    common(p)
    p.add_argument("--cases", default="zero,perfect",
                   help="comma-separated case list")
    p.add_argument("--seeds", type=int, default=1)

    p = sub.add_parser("export-lp", help="write a problem in LP format")
    common(p)
    p.add_argument("--case", choices=["zero", "perfect", "partial"],
                   required=True)
    p.add_argument("--slot", type=int, default=1)
    return parser


def _load(args) -> Scenario:
    scenario = (load_scenario(args.scenario) if args.scenario
                else baseline_scenario())
    if args.uncertainty_pct is not None:
        re = REProcess(scenario.re.phi_mean_w,
                       ("two_point", args.uncertainty_pct / 100.0))
        scenario = dataclasses.replace(scenario, re=re)
    return scenario


def _build_problem(scenario, args):
    phi = solar.sample_matrix(scenario.re, solar.named_rng(args.seed, "phi"))
    if args.case == "zero":
        if not 1 <= args.slot <= scenario.horizon:
            raise ValidationError(f"slot {args.slot} outside horizon")
        return problems.build_zero(
            scenario, args.slot, [0] * scenario.drone_count,
            scenario.initial_batteries_j, phi[:, args.slot - 1])
    if args.case == "perfect":
        return problems.build_perfect(scenario, phi)
    tree = sim.make_tree(scenario, args.seed, args.tree_cap,
                         args.sampled_scenarios)
    return problems.build_partial(scenario, tree)


def _emit(payload) -> None:
    print(json.dumps(payload, sort_keys=True))


def cmd_validate(args) -> int:
    scenario = _load(args)
    p = scenario.params
    payload = {
        "command": "validate",
        "horizon_slots": scenario.horizon,
        "drones": scenario.drone_count,
        "mbs": scenario.topology.m_count,
        "sites": scenario.topology.z_count,
        "users_per_slot": list(scenario.users.users_per_slot),
        "params": {f.name: getattr(p, f.name) for f in dataclasses.fields(p)},
        "initial_batteries_j": list(scenario.initial_batteries_j),
        "defaulted": list(scenario.defaulted),
        "warnings": list(scenario.warnings),
    }
    _emit(payload)
    return 0


def cmd_solve(args, export_only: bool = False) -> int:
    scenario = _load(args)
    bilp, vm = _build_problem(scenario, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if export_only:
        path = out / f"model_{args.case}.lp"
        lp_io.write_lp(bilp, path)
        _emit({"command": "export-lp", "case": args.case, "path": str(path),
               "variables": bilp.n, "rows": len(bilp.rows)})
        return 0
    report = solver.branch_and_bound(bilp, time_limit_s=args.time_limit_s,
                                     varmap=vm)
    payload = {
        "command": "solve", "case": args.case, "status": report.status,
        "objective_J": report.objective_j, "gap": report.gap,
        "nodes": report.nodes, "wall_time_s": round(report.wall_time_s, 3),
    }
    if report.bits is not None:
        sched = problems.decode(report.bits, vm, scenario, bilp)
        bits_path = out / f"solution_{args.case}.bits"
        bits_path.write_text("".join(str(int(b)) for b in report.bits) + "\n")
        place_path = out / f"schedule_{args.case}.csv"
        _write_schedule_csv(sched, place_path)
        payload["bits_path"] = str(bits_path)
        payload["schedule_path"] = str(place_path)
    _emit(payload)
    if report.status == solver.CAP_EXCEEDED:
        return 2
    return 0


def _write_schedule_csv(sched, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot", "mbs_on", "drone_sites",
                         "E0_J", "EM_J", "ED_J"])
        for idx, slot in enumerate(sched.slots):
            writer.writerow([
                slot,
                " ".join(str(int(v)) for v in sched.mbs_on[idx]),
                " ".join(str(int(v)) for v in sched.sites[idx]),
                f"{sched.macro_j[idx]:.6f}",
                f"{sched.mbs_j[idx]:.6f}",
                f"{sched.drones_j[idx]:.6f}"])


def cmd_rollout(args) -> int:
    scenario = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = [args.seed + i for i in range(args.seeds)]
    traces = [sim.run_case(scenario, args.case, s, args.time_limit_s,
                           args.tree_cap, args.sampled_scenarios)
              for s in seeds]
    trace_path = out / f"trace_{args.case}.csv"
    place_path = out / f"placements_{args.case}.csv"
    sim.write_trace_csv(traces, trace_path, scenario.drone_count)
    sim.write_placement_csv(traces, place_path)
    _emit({"command": "rollout", "case": args.case, "seeds": seeds,
           "mean_total_J": float(np.mean([t.total_j for t in traces])),
           "overload_slots": int(sum(t.overload_slots for t in traces)),
           "trace_path": str(trace_path), "placements_path": str(place_path)})
    return 0


def cmd_compare(args) -> int:
    scenario = _load(args)
    cases = [c.strip() for c in args.cases.split(",") if c.strip()]
    if not cases:
        raise ValidationError("compare needs at least one case")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = [args.seed + i for i in range(args.seeds)]
    report = sim.compare(scenario, cases, seeds, args.time_limit_s,
                         args.tree_cap, args.sampled_scenarios)
    summary_path = out / "summary.csv"
    trace_path = out / "traces.csv"
    sim.write_summary_csv(report, summary_path)
    sim.write_trace_csv(report.traces, trace_path, scenario.drone_count)
    _emit({"command": "compare", "cases": cases, "seeds": seeds,
           "summary_path": str(summary_path), "trace_path": str(trace_path),
           "mean_total_J": {s.case: s.mean_total_j for s in report.summaries},
           "overload_slots": {s.case: s.total_overload_slots
                              for s in report.summaries}})
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "export-lp":
            return cmd_solve(args, export_only=True)
        if args.command == "rollout":
            return cmd_rollout(args)
        if args.command == "compare":
            return cmd_compare(args)
        parser.error(f"unknown command {args.command!r}")
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DronePlanError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
