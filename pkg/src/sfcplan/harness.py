"""Benchmark harness: run solver sweeps and emit CSV reports.

A plan names scenarios (builtin or generated), algorithms and seeds.
Every run is re-judged with a fresh constraint evaluation so the report
never trusts a solver's own feasibility claim.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import constraints
from .baselines import solve_dp, solve_np, solve_rp
from .exact import Mode, SearchConfig, solve_exact
from .model import ScenarioError, ServiceRequest, SubstrateNetwork
from .rcg import GaParams, run_rcg
from .scenarios import builtin_scenario_8node, generate_scenario

ALGORITHMS = ("sp", "dp", "np", "rp", "rcg")

RAW_FIELDS = [
    "scenario", "algorithm", "seed", "status", "objective", "bandwidth",
    "bandwidth_utilization", "cpu_utilization", "reliability_min",
    "meets_reliability", "backup_count", "wall_time_s", "work_units",
]

AGG_METRICS = ("objective", "reliability_min", "bandwidth", "wall_time_s")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    builtin: str | None = None
    nodes: int = 0
    links: int = 0
    services: int = 0
    seed: int = 0

    def build(self) -> tuple[SubstrateNetwork, list[ServiceRequest]]:
        if self.builtin == "8node":
            return builtin_scenario_8node()
        if self.builtin is not None:
            raise ScenarioError(f"unknown builtin scenario {self.builtin!r}")
        return generate_scenario(self.nodes, self.links, self.services,
                                 seed=self.seed)


@dataclass(frozen=True)
class ExperimentPlan:
    scenarios: tuple = ()
    algorithms: tuple = ("sp", "dp", "np", "rp", "rcg")
    seeds: tuple = (0,)
    alpha: float = 0.5
    time_limit: float = 60.0
    node_limit: int = 200_000

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentPlan":
        scenarios = tuple(ScenarioSpec(**s) for s in doc["scenarios"])
        algos = tuple(doc.get("algorithms", ALGORITHMS))
        for a in algos:
            if a not in ALGORITHMS:
                raise ScenarioError(f"unknown algorithm {a!r}")
        return ExperimentPlan(
            scenarios=scenarios, algorithms=algos,
            seeds=tuple(doc.get("seeds", [0])),
            alpha=doc.get("alpha", 0.5),
            time_limit=doc.get("time_limit", 60.0),
            node_limit=doc.get("node_limit", 200_000))

    @staticmethod
    def load(path) -> "ExperimentPlan":
        with open(path) as fh:
            return ExperimentPlan.from_dict(json.load(fh))


def run_algorithm(name: str, net: SubstrateNetwork,
                  reqs: list[ServiceRequest], *, alpha: float = 0.5,
                  seed: int = 0, time_limit: float = 60.0,
                  node_limit: int = 200_000):
    """Dispatch to one solver; returns (solution_or_None, work_units)."""
    cfg = SearchConfig(alpha=alpha, time_limit=time_limit,
                       node_limit=node_limit)
    if name == "sp":
        res = solve_exact(net, reqs, cfg)
        return res.solution, res.stats.nodes_expanded
    if name == "dp":
        res = solve_dp(net, reqs, cfg)
        return res.solution, res.stats.nodes_expanded
    if name == "np":
        res = solve_np(net, reqs, cfg)
        return res.solution, res.stats.nodes_expanded
    if name == "rp":
        res = solve_rp(net, reqs, cfg, rng_seed=seed)
        return res.solution, 1
    if name == "rcg":
        params = GaParams(rng_seed=seed, objective_alpha=alpha)
        res = run_rcg(net, reqs, params)
        return res.solution, res.generations
    raise ScenarioError(f"unknown algorithm {name!r}")


def run_one(scenario_name: str, algorithm: str, net: SubstrateNetwork,
            reqs: list[ServiceRequest], *, alpha: float = 0.5, seed: int = 0,
            time_limit: float = 60.0, node_limit: int = 200_000) -> dict:
    row = {k: "" for k in RAW_FIELDS}
    row.update(scenario=scenario_name, algorithm=algorithm, seed=seed)
    t0 = time.perf_counter()
    try:
        sol, work = run_algorithm(
            algorithm, net, reqs, alpha=alpha, seed=seed,
            time_limit=time_limit, node_limit=node_limit)
    except Exception:
        row.update(status="error", wall_time_s=round(time.perf_counter() - t0, 4))
        return row
    wall = time.perf_counter() - t0
    if sol is None:
        row.update(status="no_solution", wall_time_s=round(wall, 4),
                   work_units=work)
        return row

    # Independent verdict: never trust the solver's own flag.
    report, metrics, rel = constraints.evaluate(sol, net, reqs, alpha=alpha)
    structural_ok = all(
        c.passed for c in report.checks
        if c.constraint is not constraints.ConstraintId.RELIABILITY)
    meets_rel = all(
        c.passed for c in report.checks
        if c.constraint is constraints.ConstraintId.RELIABILITY)
    rel_min = min(rel.per_service.values()) if rel.per_service else 1.0
    row.update(
        status="ok" if structural_ok else "violates_constraints",
        objective=round(metrics.objective, 9),
        bandwidth=round(metrics.total_bandwidth, 6),
        bandwidth_utilization=round(metrics.bandwidth_utilization, 6),
        cpu_utilization=round(metrics.cpu_utilization, 6),
        reliability_min=round(rel_min, 9),
        meets_reliability=int(meets_rel),
        backup_count=metrics.backup_count,
        wall_time_s=round(wall, 4),
        work_units=work,
    )
    return row


def run_plan(plan: ExperimentPlan) -> list[dict]:
    rows = []
    for spec in plan.scenarios:
        net, reqs = spec.build()
        for algo in plan.algorithms:
            for seed in plan.seeds:
                rows.append(run_one(
                    spec.name, algo, net, reqs, alpha=plan.alpha, seed=seed,
                    time_limit=plan.time_limit, node_limit=plan.node_limit))
    return rows


def aggregate_rows(rows: list[dict]) -> list[dict]:
    """Group raw rows by (scenario, algorithm); mean/min/max per metric."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["scenario"], r["algorithm"]), []).append(r)
    out = []
    for (scen, algo), grp in sorted(groups.items()):
        ok = [r for r in grp if r["status"] == "ok"]
        agg = {"scenario": scen, "algorithm": algo,
               "runs": len(grp), "ok_rate": round(len(ok) / len(grp), 6)}
        for m in AGG_METRICS:
            vals = [float(r[m]) for r in ok if r[m] != ""]
            if vals:
                agg[f"{m}_mean"] = round(sum(vals) / len(vals), 9)
                agg[f"{m}_min"] = round(min(vals), 9)
                agg[f"{m}_max"] = round(max(vals), 9)
            else:
                agg[f"{m}_mean"] = agg[f"{m}_min"] = agg[f"{m}_max"] = ""
        out.append(agg)
    return out


def _write_csv(path: Path, rows: list[dict], fields: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def run_experiment(plan: ExperimentPlan, out_dir, render: bool = True) -> dict:
    """Execute a plan; write raw.csv, aggregate.csv and figures to out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw = run_plan(plan)
    agg = aggregate_rows(raw)
    _write_csv(out / "raw.csv", raw, RAW_FIELDS)
    agg_fields = ["scenario", "algorithm", "runs", "ok_rate"]
    for m in AGG_METRICS:
        agg_fields += [f"{m}_mean", f"{m}_min", f"{m}_max"]
    _write_csv(out / "aggregate.csv", agg, agg_fields)
    figures = []
    if render:
        from .plotting import render_report
        figures = render_report(agg, out)
    return {"raw": raw, "aggregate": agg,
            "raw_path": out / "raw.csv", "aggregate_path": out / "aggregate.csv",
            "figures": figures}
