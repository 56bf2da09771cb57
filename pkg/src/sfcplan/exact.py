"""Deterministic branch-and-bound search over placement, routing and protection.

Branching order: chain placements per service (cheapest estimated route
first), then the primary walk from k-shortest segment candidates, then
per-VNF protection decisions (stay unprotected, join a compatible shared
backup, or open a new one), then the detour for each assignment. The lower
bound at every node is the objective restricted to committed backups and
committed bandwidth; both terms only grow along a branch.

``enumerate_all`` is the independent oracle: plain nested enumeration of
the same candidate space, scored solely by the constraints module.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from enum import Enum
from itertools import product
from typing import Iterator, Sequence

import networkx as nx

from . import constraints
from .model import (BackupVnf, ServiceRequest, Solution, SubstrateNetwork,
                    solution_to_dict, split_walk)
from .paths import PathCatalog

TIE_TOL = 1e-12


class Mode(Enum):
    SHARED_PROTECTION = "sp"
    DEDICATED_PROTECTION = "dp"
    NO_PROTECTION = "np"


@dataclass
class SearchConfig:
    alpha: float = 0.5
    mode: Mode = Mode.SHARED_PROTECTION
    k_paths: int | None = 8
    max_backups_per_type: int = 4
    node_limit: int = 200_000
    time_limit: float = 60.0
    tolerance: float = 0.0

    def __post_init__(self):
        if self.node_limit <= 0 or self.time_limit <= 0:
            raise ValueError("search limits must be positive")
        if self.max_backups_per_type <= 0:
            raise ValueError("max_backups_per_type must be positive")


@dataclass
class SearchStats:
    nodes_expanded: int = 0
    incumbents: int = 0
    proven_optimal: bool = False
    wall_time: float = 0.0


@dataclass
class ExactResult:
    solution: Solution | None
    metrics: constraints.MetricsRecord | None
    stats: SearchStats
    feasible: bool
    diagnosis: str | None = None


def canonical_key(sol: Solution) -> str:
    """Byte-stable identity of a solution, invariant to backup numbering."""
    relabel = {b.id: rank for rank, b in enumerate(
        sorted(sol.backups, key=lambda b: (b.vnf_type, b.host, sol.users_of(b.id))))}
    canon = Solution(
        placements=dict(sol.placements),
        backups=tuple(sorted((replace(b, id=relabel[b.id]) for b in sol.backups),
                             key=lambda b: b.id)),
        assignments=frozenset((i, j, relabel[l]) for (i, j, l) in sol.assignments),
        primary_paths=dict(sol.primary_paths),
        backup_paths={(i, relabel[l]): p for (i, l), p in sol.backup_paths.items()},
    )
    return json.dumps(solution_to_dict(canon), sort_keys=True)


def _solution_feasible(report: constraints.ConstraintReport, mode: Mode) -> bool:
    if mode is Mode.NO_PROTECTION:
        return all(c.passed for c in report.checks
                   if c.constraint is not constraints.ConstraintId.RELIABILITY)
    return report.feasible


class _Budget(Exception):
    pass


class _Search:
    def __init__(self, net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
                 cfg: SearchConfig):
        self.net = net
        self.reqs = sorted(reqs, key=lambda r: r.id)
        self.cfg = cfg
        self.catalog = PathCatalog(net, k=cfg.k_paths)
        self.total_bw_cap = net.total_link_bandwidth
        self.primary_count = sum(len(r.chain) for r in self.reqs)
        self.theta_max = max(s.reliability for s in net.servers.values())
        self.dist = dict(nx.all_pairs_dijkstra_path_length(self.catalog._graph,
                                                           weight="delay"))
        self.stats = SearchStats()
        self.best_obj = float("inf")
        self.best_key: str | None = None
        self.best: tuple[Solution, constraints.MetricsRecord] | None = None
        self.eliminations: dict[str, int] = {}
        self.deadline = 0.0
        # mutable search state
        self.placements: dict[tuple[int, int], int] = {}
        self.server_load: dict[int, float] = {k: 0.0 for k in net.servers}
        self.link_load: dict[int, float] = {m: 0.0 for m in net.links}
        self.walks: dict[int, tuple[int, ...]] = {}
        self.segments: dict[int, list[list[int]]] = {}
        self.committed_bw = 0.0
        # protection state: one record per open backup
        self.backups: list[dict] = []
        self.vnfs: list[tuple[ServiceRequest, int]] = [
            (r, j) for r in self.reqs for j in range(1, len(r.chain) + 1)]
        self.decisions: dict[tuple[int, int], dict | None] = {}

    # -- bookkeeping -------------------------------------------------------

    def _tick(self):
        self.stats.nodes_expanded += 1
        if self.stats.nodes_expanded >= self.cfg.node_limit:
            raise _Budget
        if self.stats.nodes_expanded % 512 == 0 and time.perf_counter() > self.deadline:
            raise _Budget

    def _eliminate(self, family: str):
        self.eliminations[family] = self.eliminations.get(family, 0) + 1

    def _bound(self) -> float:
        return (self.cfg.alpha * len(self.backups) / self.primary_count
                + (1.0 - self.cfg.alpha) * self.committed_bw / self.total_bw_cap)

    # -- phase 1: placement and routing -------------------------------------

    def _placement_candidates(self, req: ServiceRequest) -> list[tuple[int, ...]]:
        servers = sorted(self.net.servers)
        combos = []
        for combo in product(servers, repeat=len(req.chain)):
            waypoints = [req.source, *combo, req.destination]
            cost = 0.0
            ok = True
            for a, b in zip(waypoints, waypoints[1:]):
                if a == b:
                    continue
                d = self.dist.get(a, {}).get(b)
                if d is None:
                    ok = False
                    break
                cost += d
            if ok and cost <= req.max_delay:
                combos.append((cost, combo))
        combos.sort()
        return [c for _, c in combos]

    def run(self) -> ExactResult:
        start = time.perf_counter()
        self.deadline = start + self.cfg.time_limit
        self.candidates = [self._placement_candidates(r) for r in self.reqs]
        exhausted = True
        try:
            self._place_service(0)
        except _Budget:
            exhausted = False
        self.stats.wall_time = time.perf_counter() - start
        self.stats.proven_optimal = exhausted and self.best is not None
        if self.best is None:
            if self.eliminations:
                worst = max(sorted(self.eliminations), key=lambda k: self.eliminations[k])
                diagnosis = (f"no feasible solution; most candidates eliminated by "
                             f"{worst} ({self.eliminations[worst]} eliminations)")
            else:
                diagnosis = "no feasible solution; no candidates survived routing"
            return ExactResult(None, None, self.stats, False, diagnosis)
        sol, met = self.best
        return ExactResult(sol, met, self.stats, True)

    def _place_service(self, idx: int):
        if idx == len(self.reqs):
            self.segments = {}
            self._protect(0)
            return
        req = self.reqs[idx]
        for combo in self.candidates[idx]:
            self._tick()
            # capacity check, strict
            loads = dict()
            ok = True
            for j, vnf in enumerate(req.chain, start=1):
                k = combo[j - 1]
                new = self.server_load[k] + loads.get(k, 0.0) + vnf.cpu_demand
                if new >= self.net.servers[k].capacity + self.cfg.tolerance:
                    ok = False
                    break
                loads[k] = loads.get(k, 0.0) + vnf.cpu_demand
            if not ok:
                self._eliminate("ServerCapacity")
                continue
            waypoints = [req.source, *combo, req.destination]
            for walk in self.catalog.walk_candidates(waypoints):
                self._tick()
                if self.net.path_delay(walk) > req.max_delay:
                    self._eliminate("Delay")
                    continue
                over = False
                for m in walk:
                    if (self.link_load[m] + req.bandwidth
                            >= self.net.links[m].bandwidth + self.cfg.tolerance):
                        over = True
                        break
                if over:
                    self._eliminate("LinkBandwidth")
                    continue
                added_bw = req.bandwidth * len(walk)
                if (self._bound() + (1 - self.cfg.alpha) * added_bw / self.total_bw_cap
                        >= self.best_obj - TIE_TOL and self.best is not None):
                    continue
                # commit
                for j in range(1, len(req.chain) + 1):
                    self.placements[(req.id, j)] = combo[j - 1]
                for k, amount in loads.items():
                    self.server_load[k] += amount
                for m in walk:
                    self.link_load[m] += req.bandwidth
                self.walks[req.id] = walk
                self.committed_bw += added_bw
                self._place_service(idx + 1)
                # rollback
                self.committed_bw -= added_bw
                del self.walks[req.id]
                for m in walk:
                    self.link_load[m] -= req.bandwidth
                for k, amount in loads.items():
                    self.server_load[k] -= amount
                for j in range(1, len(req.chain) + 1):
                    del self.placements[(req.id, j)]

    # -- phase 2: protection -------------------------------------------------

    def _dp_bound(self, rp: float, rb: float) -> float:
        return 1.0 - (1.0 - rp) * (1.0 - rb)

    def _reliability_reachable(self) -> bool:
        if self.cfg.mode is Mode.NO_PROTECTION:
            return True
        for req in self.reqs:
            ub = 1.0
            for j in range(1, len(req.chain) + 1):
                rp = self.net.servers[self.placements[(req.id, j)]].reliability
                decision = self.decisions.get((req.id, j), "undecided")
                if decision == "undecided":
                    ub *= self._dp_bound(rp, self.theta_max)
                elif decision is None:
                    ub *= rp
                else:
                    ub *= self._dp_bound(rp, decision["reliability"])
            if ub < req.min_reliability:
                return False
        return True

    def _segments_for(self, req: ServiceRequest) -> list[list[int]]:
        if req.id not in self.segments:
            sol = Solution(placements=self.placements, primary_paths=self.walks)
            segs = split_walk(self.net, sol, req)
            assert segs is not None
            self.segments[req.id] = segs
        return self.segments[req.id]

    def _detour_ok(self, req: ServiceRequest, j: int, detour: tuple[int, ...]) -> bool:
        segs = self._segments_for(req)
        base = self.net.path_delay(self.walks[req.id])
        replaced = self.net.path_delay(segs[j - 1]) + self.net.path_delay(segs[j])
        return base - replaced + self.net.path_delay(detour) <= req.max_delay

    def _protection_options(self, req: ServiceRequest, j: int) -> Iterator[dict]:
        """New-backup hosts first (most reliable leaves), then joins."""
        vnf = req.chain[j - 1]
        host = self.placements[(req.id, j)]
        type_count = sum(1 for b in self.backups if b["type"] == vnf.vnf_type)
        if type_count < self.cfg.max_backups_per_type:
            for k in sorted(self.net.servers,
                            key=lambda k: (-self.net.servers[k].reliability, k)):
                if k == host:
                    continue
                yield {"kind": "new", "host": k}
        if self.cfg.mode is Mode.SHARED_PROTECTION:
            for b in self.backups:
                if b["type"] != vnf.vnf_type or b["host"] == host:
                    continue
                if any(m_i == req.id for (m_i, m_j) in b["users"]):
                    continue  # one detour per (service, backup)
                if any(self.placements[(m_i, m_j)] == host for (m_i, m_j) in b["users"]):
                    continue  # co-sharers must sit on distinct servers
                yield {"kind": "join", "backup": b}

    def _protect(self, v_idx: int):
        if not self._reliability_reachable():
            self._eliminate("Reliability")
            return
        if self.best is not None and self._bound() >= self.best_obj - TIE_TOL:
            return
        if v_idx == len(self.vnfs):
            self._finalize_leaf()
            return
        req, j = self.vnfs[v_idx]
        self._tick()
        if self.cfg.mode is Mode.NO_PROTECTION:
            self.decisions[(req.id, j)] = None
            self._protect(v_idx + 1)
            del self.decisions[(req.id, j)]
            return
        vnf = req.chain[j - 1]
        hosts = [self.placements[(req.id, t)] for t in range(1, len(req.chain) + 1)]
        prev = req.source if j == 1 else hosts[j - 2]
        nxt = req.destination if j == len(req.chain) else hosts[j]
        for option in list(self._protection_options(req, j)):
            if option["kind"] == "join":
                b = option["backup"]
            else:
                k = option["host"]
                if (self.server_load[k] + vnf.cpu_demand
                        >= self.net.servers[k].capacity + self.cfg.tolerance):
                    self._eliminate("ServerCapacity")
                    continue
                b = {"id": len(self.backups), "type": vnf.vnf_type, "host": k,
                     "reliability": self.net.servers[k].reliability,
                     "users": [], "detours": {}, "reserved": {}, "cpu": 0.0}
            for detour in self.catalog.detour_candidates(prev, b["host"], nxt):
                self._tick()
                if not self._detour_ok(req, j, detour):
                    self._eliminate("Delay")
                    continue
                # bandwidth reservation deltas (max-shared per link)
                deltas = {}
                over = False
                for m in detour:
                    old = b["reserved"].get(m, 0.0)
                    delta = max(old, req.bandwidth) - old
                    if delta and (self.link_load[m] + delta
                                  >= self.net.links[m].bandwidth + self.cfg.tolerance):
                        over = True
                        break
                    deltas[m] = delta
                if over:
                    self._eliminate("LinkBandwidth")
                    continue
                cpu_delta = max(b["cpu"], vnf.cpu_demand) - b["cpu"]
                if (cpu_delta and self.server_load[b["host"]] + cpu_delta
                        >= self.net.servers[b["host"]].capacity + self.cfg.tolerance):
                    self._eliminate("ServerCapacity")
                    continue
                # commit
                new_backup = option["kind"] == "new"
                if new_backup:
                    self.backups.append(b)
                b["users"].append((req.id, j))
                b["detours"][(req.id, j)] = detour
                old_cpu = b["cpu"]
                b["cpu"] += cpu_delta
                self.server_load[b["host"]] += cpu_delta
                bw_delta = sum(deltas.values())
                for m, d in deltas.items():
                    self.link_load[m] += d
                    b["reserved"][m] = b["reserved"].get(m, 0.0) + d
                self.committed_bw += bw_delta
                self.decisions[(req.id, j)] = b
                self._protect(v_idx + 1)
                # rollback
                del self.decisions[(req.id, j)]
                self.committed_bw -= bw_delta
                for m, d in deltas.items():
                    self.link_load[m] -= d
                    b["reserved"][m] -= d
                    if b["reserved"][m] == 0.0:
                        del b["reserved"][m]
                self.server_load[b["host"]] -= cpu_delta
                b["cpu"] = old_cpu
                del b["detours"][(req.id, j)]
                b["users"].pop()
                if new_backup:
                    self.backups.pop()
        # unprotected last: protected leaves are far more likely feasible,
        # so diving through them first yields an incumbent early
        self.decisions[(req.id, j)] = None
        self._protect(v_idx + 1)
        del self.decisions[(req.id, j)]

    def _finalize_leaf(self):
        sol = self._build_solution()
        try:
            report, met, _rel = constraints.evaluate(
                sol, self.net, self.reqs, alpha=self.cfg.alpha,
                tolerance=self.cfg.tolerance)
        except ValueError:
            return
        if not _solution_feasible(report, self.cfg.mode):
            families = {c.constraint.value for c in report.failures()}
            for fam in families:
                self._eliminate(fam)
            return
        key = canonical_key(sol)
        better = met.objective < self.best_obj - TIE_TOL
        tie = (abs(met.objective - self.best_obj) <= TIE_TOL
               and (self.best_key is None or key < self.best_key))
        if better or tie:
            self.best = (sol, met)
            self.best_obj = met.objective
            self.best_key = key
            self.stats.incumbents += 1

    def _build_solution(self) -> Solution:
        backups = tuple(BackupVnf(id=b["id"], vnf_type=b["type"], host=b["host"],
                                  cpu_reservation=b["cpu"])
                        for b in self.backups)
        assignments = frozenset((i, j, b["id"]) for b in self.backups
                                for (i, j) in b["users"])
        backup_paths = {(i, b["id"]): detour for b in self.backups
                        for (i, j), detour in b["detours"].items()}
        return Solution(placements=dict(self.placements), backups=backups,
                        assignments=assignments,
                        primary_paths=dict(self.walks), backup_paths=backup_paths)


def solve_exact(net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
                cfg: SearchConfig | None = None) -> ExactResult:
    cfg = cfg or SearchConfig()
    return _Search(net, reqs, cfg).run()


# --- independent oracle ----------------------------------------------------

ENUMERATION_GUARD = 10_000_000


def _set_partitions(items: list) -> Iterator[list[list]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for idx in range(len(part)):
            yield part[:idx] + [[first] + part[idx]] + part[idx + 1:]
        yield [[first]] + part


def enumerate_all(net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
                  cfg: SearchConfig | None = None) -> ExactResult:
    """Exhaustive enumeration of placements x walks x protection configs.

    Only for toy sizes; refuses to run past ``ENUMERATION_GUARD`` candidates.
    """
    cfg = cfg or SearchConfig()
    reqs = sorted(reqs, key=lambda r: r.id)
    catalog = PathCatalog(net, k=cfg.k_paths)
    servers = sorted(net.servers)
    start = time.perf_counter()
    stats = SearchStats()

    placement_space = 1
    for r in reqs:
        placement_space *= len(servers) ** len(r.chain)
    if placement_space > ENUMERATION_GUARD:
        raise ValueError("instance too large for exhaustive enumeration")

    best: tuple[float, str, Solution, constraints.MetricsRecord] | None = None

    def consider(sol: Solution):
        nonlocal best
        stats.nodes_expanded += 1
        if stats.nodes_expanded > ENUMERATION_GUARD:
            raise ValueError("enumeration guard exceeded")
        try:
            report, met, _ = constraints.evaluate(sol, net, reqs, alpha=cfg.alpha,
                                                  tolerance=cfg.tolerance)
        except ValueError:
            return
        if not _solution_feasible(report, cfg.mode):
            return
        key = canonical_key(sol)
        entry = (met.objective, key, sol, met)
        if best is None or (entry[0] < best[0] - TIE_TOL) or (
                abs(entry[0] - best[0]) <= TIE_TOL and key < best[1]):
            best = entry
            stats.incumbents += 1

    def protection_configs(placements: dict, walks: dict):
        base = Solution(placements=placements, primary_paths=dict(walks))
        yield base
        if cfg.mode is Mode.NO_PROTECTION:
            return
        vnfs = [(r, j) for r in reqs for j in range(1, len(r.chain) + 1)]
        # every subset of VNFs may be protected
        for mask in range(1, 1 << len(vnfs)):
            protected = [vnfs[t] for t in range(len(vnfs)) if mask >> t & 1]
            by_type: dict[int, list] = {}
            for (r, j) in protected:
                by_type.setdefault(r.chain[j - 1].vnf_type, []).append((r, j))
            group_sets = []
            ok = True
            for t in sorted(by_type):
                members = by_type[t]
                if cfg.mode is Mode.DEDICATED_PROTECTION:
                    parts = [[[m] for m in members]]
                else:
                    parts = [p for p in _set_partitions(members)
                             if len(p) <= cfg.max_backups_per_type]
                if not parts:
                    ok = False
                    break
                group_sets.append((t, parts))
            if not ok:
                continue
            for partition_combo in product(*(parts for _, parts in group_sets)):
                groups = []
                valid = True
                for (t, _), parts in zip(group_sets, partition_combo):
                    if cfg.mode is Mode.DEDICATED_PROTECTION and len(parts) > cfg.max_backups_per_type:
                        valid = False
                        break
                    for g in parts:
                        if len({r.id for (r, _j) in g}) != len(g):
                            valid = False  # one backup serves <= 1 VNF per service
                            break
                        groups.append((t, g))
                    if not valid:
                        break
                if not valid:
                    continue
                host_choices = product(servers, repeat=len(groups))
                for hosts in host_choices:
                    detour_options = []
                    feasible = True
                    for (t, g), host in zip(groups, hosts):
                        for (r, j) in g:
                            chain_hosts_ = [r.source] + [placements[(r.id, p)]
                                                         for p in range(1, len(r.chain) + 1)] + [r.destination]
                            prev, nxt = chain_hosts_[j - 1], chain_hosts_[j + 1]
                            cands = catalog.detour_candidates(prev, host, nxt)
                            if not cands:
                                feasible = False
                                break
                            detour_options.append(((r.id, j), cands))
                        if not feasible:
                            break
                    if not feasible:
                        continue
                    for detour_combo in product(*(c for _, c in detour_options)):
                        backups = tuple(
                            BackupVnf(id=idx, vnf_type=t, host=h,
                                      cpu_reservation=max(r.chain[j - 1].cpu_demand
                                                          for (r, j) in g))
                            for idx, ((t, g), h) in enumerate(zip(groups, hosts)))
                        assignments = frozenset(
                            (r.id, j, idx) for idx, (t, g) in enumerate(groups)
                            for (r, j) in g)
                        backup_paths = {}
                        pos = 0
                        collision = False
                        for idx, (t, g) in enumerate(groups):
                            for (r, j) in g:
                                keypair = (r.id, idx)
                                if keypair in backup_paths:
                                    collision = True
                                backup_paths[keypair] = detour_combo[pos]
                                pos += 1
                        if collision:
                            continue
                        yield Solution(placements=placements, backups=backups,
                                       assignments=assignments,
                                       primary_paths=dict(walks),
                                       backup_paths=backup_paths)

    per_service_placements = []
    for r in reqs:
        per_service_placements.append(list(product(servers, repeat=len(r.chain))))
    for placement_combo in product(*per_service_placements):
        placements = {}
        for r, combo in zip(reqs, placement_combo):
            for j in range(1, len(r.chain) + 1):
                placements[(r.id, j)] = combo[j - 1]
        walk_options = []
        routable = True
        for r, combo in zip(reqs, placement_combo):
            waypoints = [r.source, *combo, r.destination]
            cands = list(catalog.walk_candidates(waypoints))
            if not cands:
                routable = False
                break
            walk_options.append(cands)
        if not routable:
            continue
        for walk_combo in product(*walk_options):
            walks = {r.id: w for r, w in zip(reqs, walk_combo)}
            for sol in protection_configs(placements, walks):
                consider(sol)

    stats.wall_time = time.perf_counter() - start
    stats.proven_optimal = best is not None
    if best is None:
        return ExactResult(None, None, stats, False, "no feasible solution in enumeration")
    _, _, sol, met = best
    return ExactResult(sol, met, stats, True)
