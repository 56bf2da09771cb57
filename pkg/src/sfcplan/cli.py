"""Command-line interface.

Exit codes: 0 = success / feasible, 2 = no feasible solution or
constraint violation, 1 = error (bad input, unknown file, ...).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import constraints, harness, mcsim
from .model import (ScenarioError, load_scenario, load_solution,
                    save_scenario, save_solution)
from .reliability import solve_reliability
from .scenarios import generate_scenario


def _cmd_generate(args) -> int:
    net, reqs = generate_scenario(args.nodes, args.links, args.services,
                                  seed=args.seed)
    save_scenario(args.out, net, reqs)
    print(f"wrote scenario with {len(net.servers)} servers, "
          f"{len(net.links) // 2} links, {len(reqs)} services to {args.out}")
    return 0


def _cmd_solve(args) -> int:
    net, reqs = load_scenario(args.scenario)
    sol, _work = harness.run_algorithm(
        args.algorithm, net, reqs, alpha=args.alpha, seed=args.seed,
        time_limit=args.time_limit, node_limit=args.node_limit)
    if sol is None:
        print("no feasible solution found")
        return 2
    report, metrics, rel = constraints.evaluate(sol, net, reqs,
                                                alpha=args.alpha)
    if args.out:
        save_solution(args.out, sol)
    print(f"objective      {metrics.objective:.6f}")
    print(f"bandwidth      {metrics.total_bandwidth:.3f}")
    print(f"backups        {metrics.backup_count}")
    for sid in sorted(rel.per_service):
        print(f"service {sid} reliability {rel.per_service[sid]:.6f}")
    if not report.feasible:
        for c in report.failures():
            print(f"VIOLATION {c.constraint.value} {c.subject}")
        return 2
    print("feasible")
    return 0


def _cmd_sweep(args) -> int:
    plan = harness.ExperimentPlan.load(args.plan)
    result = harness.run_experiment(plan, args.out, render=not args.no_plots)
    print(f"wrote {result['raw_path']} and {result['aggregate_path']}")
    for fig in result["figures"]:
        print(f"wrote {fig}")
    return 0


def _cmd_mc_validate(args) -> int:
    net, reqs = load_scenario(args.scenario)
    sol = load_solution(args.solution)
    rel = solve_reliability(sol, net, reqs)
    est = mcsim.estimate_reliability(
        sol, net, reqs,
        mcsim.TrialConfig(trials=args.trials, rng_seed=args.seed,
                          contention_rule=args.rule))
    worst = 0.0
    for sid in sorted(rel.per_service):
        p, hw = est.per_service[sid]
        gap = abs(p - rel.per_service[sid])
        worst = max(worst, gap)
        hw_s = f"+/-{hw:.5f}" if hw is not None else "n/a"
        print(f"service {sid}: analytic {rel.per_service[sid]:.6f} "
              f"simulated {p:.6f} {hw_s} gap {gap:.6f}")
    print(f"max gap {worst:.6f}")
    return 0


def _cmd_check(args) -> int:
    net, reqs = load_scenario(args.scenario)
    sol = load_solution(args.solution)
    report, metrics, _rel = constraints.evaluate(sol, net, reqs,
                                                 alpha=args.alpha)
    print(json.dumps({"feasible": report.feasible,
                      "objective": metrics.objective,
                      "failures": [c.constraint.value
                                   for c in report.failures()]}, indent=2))
    return 0 if report.feasible else 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfcplan")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random scenario file")
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--links", type=int, required=True)
    g.add_argument("--services", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("solve", help="solve one scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--algorithm", choices=harness.ALGORITHMS, default="sp")
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--time-limit", type=float, default=60.0)
    s.add_argument("--node-limit", type=int, default=200_000)
    s.add_argument("--out", help="write the solution JSON here")
    s.set_defaults(func=_cmd_solve)

    w = sub.add_parser("sweep", help="run an experiment plan to CSV + figures")
    w.add_argument("--plan", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--no-plots", action="store_true")
    w.set_defaults(func=_cmd_sweep)

    m = sub.add_parser("mc-validate",
                       help="compare analytic reliability with simulation")
    m.add_argument("--scenario", required=True)
    m.add_argument("--solution", required=True)
    m.add_argument("--trials", type=int, default=1_000_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--rule", choices=mcsim.CONTENTION_RULES,
                   default="mttr_weighted")
    m.set_defaults(func=_cmd_mc_validate)

    c = sub.add_parser("check", help="judge a solution file")
    c.add_argument("--scenario", required=True)
    c.add_argument("--solution", required=True)
    c.add_argument("--alpha", type=float, default=0.5)
    c.set_defaults(func=_cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
