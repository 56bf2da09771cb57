"""Feasibility checking, resource metrics and the scalarized objective.

Capacity inequalities are strict as formulated (load must stay below the
capacity); a tolerance knob relaxes them for experimentation only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .model import (ServiceRequest, Solution, SubstrateNetwork, chain_hosts,
                    is_connected_walk, split_walk, validate_solution_shape,
                    walk_loop_violations)
from .reliability import ReliabilityResult, solve_reliability


class ConstraintId(Enum):
    TYPE_MATCH = "type_match"
    PATH_ENDPOINTS = "path_endpoints"
    FLOW_CONSERVATION = "flow_conservation"
    BACKUP_PATH_TOUCHES_BACKUP = "backup_path_touches_backup"
    BACKUP_DETOUR_ENDPOINTS = "backup_detour_endpoints"
    LOOP_FREE = "loop_free"
    PATH_CONNECTED = "path_connected"
    UNIQUE_PLACEMENT = "unique_placement"
    ANTI_AFFINITY_BACKUP = "anti_affinity_backup"
    ANTI_AFFINITY_CO_SHARERS = "anti_affinity_co_sharers"
    LINK_BANDWIDTH = "link_bandwidth"
    SERVER_CAPACITY = "server_capacity"
    DELAY = "delay"
    RELIABILITY = "reliability"


@dataclass(frozen=True)
class CheckResult:
    constraint: ConstraintId
    subject: tuple
    passed: bool
    magnitude: float = 0.0


@dataclass
class ConstraintReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"feasible": self.feasible,
                "checks": [{"constraint": c.constraint.value, "subject": list(c.subject),
                            "passed": c.passed, "magnitude": c.magnitude}
                           for c in self.checks]}


@dataclass
class MetricsRecord:
    total_bandwidth: float
    per_link_load: dict[int, float]
    per_server_cpu: dict[int, float]
    cpu_utilization: float
    bandwidth_utilization: float
    objective: float
    backup_count: int
    primary_count: int

    def to_dict(self) -> dict:
        return {"total_bandwidth": self.total_bandwidth,
                "cpu_utilization": self.cpu_utilization,
                "bandwidth_utilization": self.bandwidth_utilization,
                "objective": self.objective,
                "backup_count": self.backup_count,
                "primary_count": self.primary_count}


def _vnf_of(reqs: Sequence[ServiceRequest], i: int, j: int):
    for r in reqs:
        if r.id == i:
            return r.chain[j - 1]
    raise KeyError((i, j))


def check_type_match(sol: Solution, reqs: Sequence[ServiceRequest]) -> list[CheckResult]:
    out = []
    for (i, j, l) in sorted(sol.assignments):
        backup = sol.backup_by_id(l)
        ok = backup.vnf_type == _vnf_of(reqs, i, j).vnf_type
        out.append(CheckResult(ConstraintId.TYPE_MATCH, (i, j, l), ok, 0.0 if ok else 1.0))
    return out


def check_routing(sol: Solution, net: SubstrateNetwork,
                  reqs: Sequence[ServiceRequest]) -> list[CheckResult]:
    out = []
    for req in sorted(reqs, key=lambda r: r.id):
        walk = sol.primary_paths.get(req.id, ())
        connected = is_connected_walk(net, req.source, walk, req.destination)
        out.append(CheckResult(ConstraintId.PATH_ENDPOINTS, (req.id,), connected,
                               0.0 if connected else 1.0))
        ordered = connected and split_walk(net, sol, req) is not None
        out.append(CheckResult(ConstraintId.PATH_CONNECTED, (req.id,), ordered,
                               0.0 if ordered else 1.0))
        loops = walk_loop_violations(net, walk)
        out.append(CheckResult(ConstraintId.LOOP_FREE, (req.id,), not loops, float(len(loops))))
        # conservation holds by construction for any connected walk
        out.append(CheckResult(ConstraintId.FLOW_CONSERVATION, (req.id,), connected,
                               0.0 if connected else 1.0))
    return out


def _detour_endpoints(sol: Solution, req: ServiceRequest, position: int) -> tuple[int, int]:
    hosts = chain_hosts(sol, req)
    return hosts[position - 1], hosts[position + 1]


def check_backup_paths(sol: Solution, net: SubstrateNetwork,
                       reqs: Sequence[ServiceRequest]) -> list[CheckResult]:
    by_id = {r.id: r for r in reqs}
    out = []
    for (i, j, l) in sorted(sol.assignments):
        backup = sol.backup_by_id(l)
        detour = sol.backup_paths.get((i, l), ())
        prev, nxt = _detour_endpoints(sol, by_id[i], j)
        connected = bool(detour) and is_connected_walk(net, prev, detour, nxt)
        out.append(CheckResult(ConstraintId.BACKUP_DETOUR_ENDPOINTS, (i, j, l), connected,
                               0.0 if connected else 1.0))
        touches = connected and backup.host in net.walk_nodes(prev, detour)
        out.append(CheckResult(ConstraintId.BACKUP_PATH_TOUCHES_BACKUP, (i, j, l), touches,
                               0.0 if touches else 1.0))
        loops = walk_loop_violations(net, detour)
        out.append(CheckResult(ConstraintId.LOOP_FREE, (i, l), not loops, float(len(loops))))
    return out


def check_anti_affinity(sol: Solution, reqs: Sequence[ServiceRequest]) -> list[CheckResult]:
    out = []
    for (i, j, l) in sorted(sol.assignments):
        backup = sol.backup_by_id(l)
        ok = sol.placements[(i, j)] != backup.host
        out.append(CheckResult(ConstraintId.ANTI_AFFINITY_BACKUP, (i, j, l), ok,
                               0.0 if ok else 1.0))
    for b in sorted(sol.backups, key=lambda b: b.id):
        users = sol.users_of(b.id)
        for a in range(len(users)):
            for c in range(a + 1, len(users)):
                ia, ja = users[a]
                ic, jc = users[c]
                ok = sol.placements[(ia, ja)] != sol.placements[(ic, jc)]
                out.append(CheckResult(ConstraintId.ANTI_AFFINITY_CO_SHARERS,
                                       (b.id, users[a], users[c]), ok, 0.0 if ok else 1.0))
    return out


def link_loads(sol: Solution, net: SubstrateNetwork,
               reqs: Sequence[ServiceRequest]) -> dict[int, float]:
    """Per-link reserved bandwidth: primary sums plus max-shared detour reservations."""
    load = {m: 0.0 for m in net.links}
    for req in reqs:
        for m in sol.primary_paths.get(req.id, ()):
            load[m] += req.bandwidth
    by_id = {r.id: r for r in reqs}
    for b in sol.backups:
        reserved: dict[int, float] = {}
        for (i, j, l) in sol.assignments:
            if l != b.id:
                continue
            for m in sol.backup_paths.get((i, l), ()):
                reserved[m] = max(reserved.get(m, 0.0), by_id[i].bandwidth)
        for m, amount in reserved.items():
            load[m] += amount
    return load


def total_bandwidth(sol: Solution, net: SubstrateNetwork,
                    reqs: Sequence[ServiceRequest]) -> float:
    return sum(link_loads(sol, net, reqs).values())


def server_cpu_loads(sol: Solution, net: SubstrateNetwork,
                     reqs: Sequence[ServiceRequest]) -> dict[int, float]:
    load = {k: 0.0 for k in net.servers}
    for req in reqs:
        for j, vnf in enumerate(req.chain, start=1):
            load[sol.placements[(req.id, j)]] += vnf.cpu_demand
    for b in sol.backups:
        demands = [_vnf_of(reqs, i, j).cpu_demand for (i, j) in sol.users_of(b.id)]
        load[b.host] += max(demands, default=0.0)
    return load


def check_capacities(sol: Solution, net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
                     tolerance: float = 0.0) -> list[CheckResult]:
    out = []
    for m, load in sorted(link_loads(sol, net, reqs).items()):
        cap = net.links[m].bandwidth + tolerance
        ok = load < cap
        out.append(CheckResult(ConstraintId.LINK_BANDWIDTH, (m,), ok,
                               0.0 if ok else load - net.links[m].bandwidth))
    for k, load in sorted(server_cpu_loads(sol, net, reqs).items()):
        cap = net.servers[k].capacity + tolerance
        ok = load < cap
        out.append(CheckResult(ConstraintId.SERVER_CAPACITY, (k,), ok,
                               0.0 if ok else load - net.servers[k].capacity))
    return out


def check_delay(sol: Solution, net: SubstrateNetwork,
                reqs: Sequence[ServiceRequest]) -> list[CheckResult]:
    """Primary delay plus every single-failure detour substitution within bound."""
    out = []
    for req in sorted(reqs, key=lambda r: r.id):
        walk = sol.primary_paths.get(req.id, ())
        base = net.path_delay(walk)
        ok = base <= req.max_delay
        out.append(CheckResult(ConstraintId.DELAY, (req.id,), ok,
                               0.0 if ok else base - req.max_delay))
        segments = split_walk(net, sol, req)
        if segments is None:
            continue
        for (i, j, l) in sorted(sol.assignments):
            if i != req.id:
                continue
            detour = sol.backup_paths.get((i, l), ())
            # segment j enters host(j), segment j+1 leaves it
            replaced = net.path_delay(segments[j - 1]) + net.path_delay(segments[j])
            with_detour = base - replaced + net.path_delay(detour)
            ok = with_detour <= req.max_delay
            out.append(CheckResult(ConstraintId.DELAY, (i, j, l), ok,
                                   0.0 if ok else with_detour - req.max_delay))
    return out


def check_reliability(sol: Solution, net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
                      rel: ReliabilityResult) -> list[CheckResult]:
    out = []
    for req in sorted(reqs, key=lambda r: r.id):
        theta = rel.per_service[req.id]
        ok = rel.converged and theta >= req.min_reliability
        out.append(CheckResult(ConstraintId.RELIABILITY, (req.id,), ok,
                               0.0 if ok else req.min_reliability - theta))
    return out


def objective(sol: Solution, net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
              alpha: float = 0.5) -> float:
    """Convex combination of backup-count ratio and normalized bandwidth; lower is better."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    primary_count = sum(len(r.chain) for r in reqs)
    if primary_count == 0:
        raise ValueError("no primary VNFs")
    bw = total_bandwidth(sol, net, reqs)
    return (alpha * len(sol.backups) / primary_count
            + (1.0 - alpha) * bw / net.total_link_bandwidth)


def metrics(sol: Solution, net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
            alpha: float = 0.5) -> MetricsRecord:
    per_link = link_loads(sol, net, reqs)
    per_cpu = server_cpu_loads(sol, net, reqs)
    bw = sum(per_link.values())
    primary_count = sum(len(r.chain) for r in reqs)
    return MetricsRecord(
        total_bandwidth=bw,
        per_link_load=per_link,
        per_server_cpu=per_cpu,
        cpu_utilization=100.0 * sum(per_cpu.values()) / net.total_cpu_capacity,
        bandwidth_utilization=100.0 * bw / net.total_link_bandwidth,
        objective=objective(sol, net, reqs, alpha),
        backup_count=len(sol.backups),
        primary_count=primary_count,
    )


def evaluate(sol: Solution, net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
             alpha: float = 0.5, tolerance: float = 0.0, fixed_point: bool = False,
             ) -> tuple[ConstraintReport, MetricsRecord, ReliabilityResult]:
    shape = validate_solution_shape(sol, net, reqs)
    if shape:
        raise ValueError("solution is not shape-valid: " + "; ".join(shape))
    rel = solve_reliability(sol, net, reqs, fixed_point=fixed_point)
    report = ConstraintReport()
    report.checks.extend(check_type_match(sol, reqs))
    report.checks.extend(check_routing(sol, net, reqs))
    report.checks.extend(check_backup_paths(sol, net, reqs))
    report.checks.extend(check_anti_affinity(sol, reqs))
    report.checks.extend(check_capacities(sol, net, reqs, tolerance=tolerance))
    report.checks.extend(check_delay(sol, net, reqs))
    report.checks.extend(check_reliability(sol, net, reqs, rel))
    return report, metrics(sol, net, reqs, alpha), rel
