"""Reliability-aware minimum-cost genetic algorithm.

Two structured chromosomes: per-service VNF/SFC genes carrying placement,
routing and backup references, and a backup chromosome carrying shared
backup instances with their user lists. Selection is linear-ranking with
constraint penalties; crossover is one-point at service granularity;
mutation relocates/reroutes/retargets with structural repair afterwards.
Convergence uses the normalized mean pairwise fitness gap.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import constraints
from .model import (BackupVnf, ServiceRequest, Solution, SubstrateNetwork,
                    is_connected_walk, split_walk, validate_solution_shape)
from .paths import PathCatalog
from .reliability import solve_reliability

DEFAULT_PENALTY_WEIGHTS = {
    "reliability": 10.0,
    "capacity": 5.0,
    "delay": 5.0,
    "structural": 20.0,
}

_STRUCTURAL = {
    constraints.ConstraintId.TYPE_MATCH,
    constraints.ConstraintId.PATH_ENDPOINTS,
    constraints.ConstraintId.PATH_CONNECTED,
    constraints.ConstraintId.FLOW_CONSERVATION,
    constraints.ConstraintId.LOOP_FREE,
    constraints.ConstraintId.BACKUP_PATH_TOUCHES_BACKUP,
    constraints.ConstraintId.BACKUP_DETOUR_ENDPOINTS,
    constraints.ConstraintId.UNIQUE_PLACEMENT,
    constraints.ConstraintId.ANTI_AFFINITY_BACKUP,
    constraints.ConstraintId.ANTI_AFFINITY_CO_SHARERS,
}


class InitializationError(RuntimeError):
    """Could not construct even one shape-valid individual."""


@dataclass
class GaParams:
    population_size: int = 50
    elitism_rate: float = 0.1
    mutation_rate: float = 0.05
    convergence_threshold: float = 0.01
    stall_generations: int = 5
    generation_cap: int = 500
    rng_seed: int = 0
    objective_alpha: float = 0.5
    k_paths: int | None = 8
    tolerance: float = 0.0
    penalty_weights: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_PENALTY_WEIGHTS))

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise ValueError("population_size must be even and at least 4")
        if not 0.0 < self.elitism_rate < 1.0:
            raise ValueError("elitism_rate must be in (0, 1)")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")

    @property
    def elite_count(self) -> int:
        ne = max(1, round(self.population_size * self.elitism_rate))
        if (self.population_size - ne) % 2:
            ne += 1
        return min(ne, self.population_size - 2)

    @classmethod
    def from_dict(cls, doc: dict) -> "GaParams":
        return cls(**doc)


@dataclass
class VnfGene:
    location: int
    function_type: int
    sfc_id: int
    position_in_chain: int
    backup_access_links: dict[int, tuple[int, ...]] = field(default_factory=dict)
    assigned_backups: list[int] = field(default_factory=list)
    reliability: float = 0.0


@dataclass
class SfcGene:
    sfc_id: int
    used_links: tuple[int, ...]
    max_delay: float
    min_reliability: float


@dataclass
class BackupGene:
    id: int
    location: int
    function_type: int
    user_vnfs: list[tuple[int, int]] = field(default_factory=list)
    reliability: float = 0.0


@dataclass
class Individual:
    vnf_genes: dict[tuple[int, int], VnfGene]
    sfc_genes: dict[int, SfcGene]
    backup_genes: dict[int, BackupGene]
    uid: int = 0
    fitness: float = float("-inf")
    penalty: float = 0.0
    rank: int = 0
    feasible: bool = False

    def decode(self) -> Solution:
        placements = {key: g.location for key, g in self.vnf_genes.items()}
        backups = tuple(BackupVnf(id=b.id, vnf_type=b.function_type, host=b.location,
                                  cpu_reservation=0.0)
                        for b in sorted(self.backup_genes.values(), key=lambda b: b.id))
        assignments = frozenset((i, j, l) for (i, j), g in self.vnf_genes.items()
                                for l in g.assigned_backups)
        primary = {i: g.used_links for i, g in self.sfc_genes.items()}
        backup_paths = {}
        for (i, j), g in self.vnf_genes.items():
            for l, links in g.backup_access_links.items():
                backup_paths[(i, l)] = links
        return Solution(placements=placements, backups=backups,
                        assignments=assignments, primary_paths=primary,
                        backup_paths=backup_paths)


@dataclass
class RcgResult:
    solution: Solution
    metrics: constraints.MetricsRecord
    generations: int
    feasible: bool
    best_fitness_history: list[float] = field(default_factory=list)


class RcgSolver:
    def __init__(self, net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
                 params: GaParams):
        self.net = net
        self.reqs = sorted(reqs, key=lambda r: r.id)
        self.params = params
        self.catalog = PathCatalog(net, k=params.k_paths)
        self.rng = random.Random(params.rng_seed)
        self._uid = 0

    # -- construction -------------------------------------------------------

    def _hosts_of(self, ind: Individual, req: ServiceRequest) -> list[int]:
        return ([req.source]
                + [ind.vnf_genes[(req.id, j)].location
                   for j in range(1, len(req.chain) + 1)]
                + [req.destination])

    def _next_uid(self) -> int:
        self._uid += 1
        return self._uid

    def _random_individual(self) -> Individual | None:
        server_load = {k: 0.0 for k in self.net.servers}
        vnf_genes: dict[tuple[int, int], VnfGene] = {}
        sfc_genes: dict[int, SfcGene] = {}
        servers = sorted(self.net.servers)
        for req in self.reqs:
            walk = None
            for _attempt in range(60):
                combo = []
                for vnf in req.chain:
                    feasible = [k for k in servers
                                if server_load[k] + vnf.cpu_demand
                                < self.net.servers[k].capacity + self.params.tolerance]
                    if not feasible:
                        combo = None
                        break
                    combo.append(self.rng.choice(feasible))
                if combo is None:
                    continue
                waypoints = [req.source, *combo, req.destination]
                cands = list(self.catalog.walk_candidates(waypoints, limit=8))
                cands = [w for w in cands if self.net.path_delay(w) <= req.max_delay] or cands
                if cands:
                    walk = self.rng.choice(cands)
                    break
            if walk is None:
                return None
            for j, vnf in enumerate(req.chain, start=1):
                vnf_genes[(req.id, j)] = VnfGene(location=combo[j - 1],
                                                 function_type=vnf.vnf_type,
                                                 sfc_id=req.id, position_in_chain=j)
                server_load[combo[j - 1]] += vnf.cpu_demand
            sfc_genes[req.id] = SfcGene(sfc_id=req.id, used_links=walk,
                                        max_delay=req.max_delay,
                                        min_reliability=req.min_reliability)
        ind = Individual(vnf_genes=vnf_genes, sfc_genes=sfc_genes, backup_genes={},
                         uid=self._next_uid())
        self._greedy_protect(ind)
        return ind

    def _greedy_protect(self, ind: Individual) -> None:
        """Add backups to failing services until the bound is met or options run out."""
        by_id = {r.id: r for r in self.reqs}
        for _round in range(3 * sum(len(r.chain) for r in self.reqs)):
            rel = self._per_service_reliability(ind)
            failing = [i for i, theta in rel.items()
                       if theta < by_id[i].min_reliability]
            if not failing:
                return
            i = min(failing, key=lambda i: rel[i])
            req = by_id[i]
            unprotected = [j for j in range(1, len(req.chain) + 1)
                           if not ind.vnf_genes[(i, j)].assigned_backups]
            if not unprotected:
                return
            j = min(unprotected,
                    key=lambda j: self.net.servers[ind.vnf_genes[(i, j)].location].reliability)
            if not self._attach_backup(ind, req, j):
                return

    def _attach_backup(self, ind: Individual, req: ServiceRequest, j: int) -> bool:
        gene = ind.vnf_genes[(req.id, j)]
        hosts = self._hosts_of(ind, req)
        prev, nxt = hosts[j - 1], hosts[j + 1]
        # join a compatible existing backup when possible
        joinable = []
        for b in sorted(ind.backup_genes.values(), key=lambda b: b.id):
            if b.function_type != gene.function_type or b.location == gene.location:
                continue
            if any(i == req.id for (i, _j) in b.user_vnfs):
                continue
            if any(ind.vnf_genes[(i, p)].location == gene.location
                   for (i, p) in b.user_vnfs):
                continue
            joinable.append(b)
        candidates: list[tuple[BackupGene | None, int]] = [(b, b.location) for b in joinable]
        others = [k for k in sorted(self.net.servers) if k != gene.location]
        self.rng.shuffle(others)
        candidates.extend((None, k) for k in others[:4])
        for backup, host in candidates:
            detours = self.catalog.detour_candidates(prev, host, nxt, limit=4)
            detours = [d for d in detours
                       if self._detour_delay_ok(ind, req, j, d)]
            if not detours:
                continue
            if backup is None:
                backup = BackupGene(id=(max(ind.backup_genes) + 1 if ind.backup_genes else 0),
                                    location=host, function_type=gene.function_type)
                ind.backup_genes[backup.id] = backup
            backup.user_vnfs.append((req.id, j))
            gene.assigned_backups.append(backup.id)
            gene.backup_access_links[backup.id] = detours[0]
            return True
        return False

    def _detour_delay_ok(self, ind: Individual, req: ServiceRequest, j: int,
                         detour: tuple[int, ...]) -> bool:
        sol = Solution(placements={k: g.location for k, g in ind.vnf_genes.items()},
                       primary_paths={i: g.used_links for i, g in ind.sfc_genes.items()})
        segs = split_walk(self.net, sol, req)
        if segs is None:
            return False
        base = self.net.path_delay(ind.sfc_genes[req.id].used_links)
        replaced = self.net.path_delay(segs[j - 1]) + self.net.path_delay(segs[j])
        return base - replaced + self.net.path_delay(detour) <= req.max_delay

    def _per_service_reliability(self, ind: Individual) -> dict[int, float]:
        sol = ind.decode()
        rel = solve_reliability(sol, self.net, self.reqs)
        for (i, j), gene in ind.vnf_genes.items():
            gene.reliability = rel.per_vnf[(i, j)]
        return rel.per_service

    def init_population(self) -> list[Individual]:
        population = []
        failures = 0
        while len(population) < self.params.population_size:
            ind = self._random_individual()
            if ind is None:
                failures += 1
                if failures > 50 and not population:
                    raise InitializationError(
                        "could not construct a shape-valid individual")
                if failures > 500:
                    raise InitializationError("initialization retry budget exhausted")
                continue
            population.append(ind)
        return population

    # -- scoring -------------------------------------------------------------

    def score(self, ind: Individual) -> tuple[float, float]:
        sol = ind.decode()
        shape = validate_solution_shape(sol, self.net, self.reqs)
        if shape:
            ind.penalty = self.params.penalty_weights["structural"] * len(shape)
            ind.fitness = -ind.penalty
            ind.feasible = False
            return ind.fitness, ind.penalty
        report, met, rel = constraints.evaluate(
            sol, self.net, self.reqs, alpha=self.params.objective_alpha,
            tolerance=self.params.tolerance)
        penalty = 0.0
        weights = self.params.penalty_weights
        by_id = {r.id: r for r in self.reqs}
        for c in report.failures():
            if c.constraint is constraints.ConstraintId.RELIABILITY:
                req = by_id[c.subject[0]]
                penalty += weights["reliability"] * c.magnitude / req.min_reliability
            elif c.constraint is constraints.ConstraintId.SERVER_CAPACITY:
                penalty += weights["capacity"] * c.magnitude / self.net.servers[c.subject[0]].capacity
            elif c.constraint is constraints.ConstraintId.LINK_BANDWIDTH:
                penalty += weights["capacity"] * c.magnitude / self.net.links[c.subject[0]].bandwidth
            elif c.constraint is constraints.ConstraintId.DELAY:
                req = by_id[c.subject[0]]
                penalty += weights["delay"] * c.magnitude / req.max_delay
            elif c.constraint in _STRUCTURAL:
                penalty += weights["structural"]
        ind.penalty = penalty
        ind.fitness = -met.objective - penalty
        ind.feasible = report.feasible
        for (i, j), gene in ind.vnf_genes.items():
            gene.reliability = rel.per_vnf[(i, j)]
        return ind.fitness, ind.penalty

    # -- operators -----------------------------------------------------------

    def rank_select(self, population: list[Individual], n_pairs: int
                    ) -> list[tuple[Individual, Individual]]:
        ordered = sorted(population, key=lambda x: (-x.fitness, x.uid))
        size = len(ordered)
        for rank, ind in enumerate(ordered):
            ind.rank = size - rank  # best gets the largest rank weight
        weights = [ind.rank for ind in ordered]
        pairs = []
        for _ in range(n_pairs):
            a = self.rng.choices(range(size), weights=weights)[0]
            b = self.rng.choices(range(size), weights=weights)[0]
            if b == a:
                b = (a + 1) % size
            pairs.append((ordered[a], ordered[b]))
        return pairs

    def crossover(self, a: Individual, b: Individual) -> tuple[Individual, Individual]:
        sids = [r.id for r in self.reqs]
        cut = self.rng.randint(0, len(sids))
        return (self._mix(a, b, sids, cut), self._mix(b, a, sids, cut))

    def _mix(self, first: Individual, second: Individual, sids: list[int],
             cut: int) -> Individual:
        vnf_genes: dict[tuple[int, int], VnfGene] = {}
        sfc_genes: dict[int, SfcGene] = {}
        backup_map: dict[tuple[int, int], int] = {}  # (which parent, old id) -> new id
        backup_genes: dict[int, BackupGene] = {}

        def take(parent: Individual, parent_tag: int, sid: int):
            sfc = parent.sfc_genes[sid]
            sfc_genes[sid] = SfcGene(sid, sfc.used_links, sfc.max_delay,
                                     sfc.min_reliability)
            for (i, j), g in parent.vnf_genes.items():
                if i != sid:
                    continue
                new_assigned = []
                new_access = {}
                for old in g.assigned_backups:
                    key = (parent_tag, old)
                    if key not in backup_map:
                        nid = len(backup_map)
                        backup_map[key] = nid
                        src = parent.backup_genes[old]
                        backup_genes[nid] = BackupGene(id=nid, location=src.location,
                                                       function_type=src.function_type)
                    nid = backup_map[key]
                    new_assigned.append(nid)
                    new_access[nid] = g.backup_access_links[old]
                    backup_genes[nid].user_vnfs.append((i, j))
                vnf_genes[(i, j)] = VnfGene(location=g.location,
                                            function_type=g.function_type,
                                            sfc_id=i, position_in_chain=j,
                                            backup_access_links=new_access,
                                            assigned_backups=new_assigned,
                                            reliability=g.reliability)

        for idx, sid in enumerate(sids):
            take(first if idx < cut else second, 0 if idx < cut else 1, sid)
        child = Individual(vnf_genes=vnf_genes, sfc_genes=sfc_genes,
                           backup_genes=backup_genes, uid=self._next_uid())
        self.repair(child)
        return child

    def mutate_and_repair(self, ind: Individual) -> Individual:
        gamma = self.params.mutation_rate
        by_id = {r.id: r for r in self.reqs}
        dirty_services: set[int] = set()
        for key in sorted(ind.vnf_genes):
            if self.rng.random() >= gamma:
                continue
            gene = ind.vnf_genes[key]
            req = by_id[gene.sfc_id]
            op = self.rng.choice(("relocate", "backup"))
            if op == "relocate":
                options = [k for k in sorted(self.net.servers) if k != gene.location]
                if options:
                    gene.location = self.rng.choice(options)
                    dirty_services.add(gene.sfc_id)
            else:
                if gene.assigned_backups:
                    self._drop_assignment(ind, key, gene.assigned_backups[-1])
                else:
                    self._attach_backup(ind, req, gene.position_in_chain)
        for sid in sorted(ind.sfc_genes):
            if self.rng.random() < gamma:
                dirty_services.add(sid)
        repaired = self.repair(ind, reroute=dirty_services)
        if not repaired:
            fresh = self._random_individual()
            if fresh is not None:
                return fresh
        return ind

    def _drop_assignment(self, ind: Individual, key: tuple[int, int], backup_id: int):
        gene = ind.vnf_genes[key]
        gene.assigned_backups.remove(backup_id)
        gene.backup_access_links.pop(backup_id, None)
        b = ind.backup_genes[backup_id]
        if key in b.user_vnfs:
            b.user_vnfs.remove(key)
        if not b.user_vnfs:
            del ind.backup_genes[backup_id]

    def repair(self, ind: Individual, reroute: set[int] | None = None) -> bool:
        """Restore shape validity; returns False when the individual is irreparable."""
        reroute = set(reroute or ())
        # re-derive user lists from the assignment side
        for b in ind.backup_genes.values():
            b.user_vnfs = []
        for key in sorted(ind.vnf_genes):
            gene = ind.vnf_genes[key]
            kept = []
            for l in gene.assigned_backups:
                b = ind.backup_genes.get(l)
                if b is None or b.function_type != gene.function_type:
                    gene.backup_access_links.pop(l, None)
                    continue
                kept.append(l)
                b.user_vnfs.append(key)
            gene.assigned_backups = kept
        for l in [l for l, b in ind.backup_genes.items() if not b.user_vnfs]:
            del ind.backup_genes[l]

        for req in self.reqs:
            hosts = self._hosts_of(ind, req)
            walk = ind.sfc_genes[req.id].used_links
            needs_walk = req.id in reroute or not self._walk_matches(req, hosts, walk)
            if needs_walk:
                cands = list(self.catalog.walk_candidates(hosts, limit=8))
                good = [w for w in cands if self.net.path_delay(w) <= req.max_delay]
                pick = (good or cands)
                if not pick:
                    return False
                ind.sfc_genes[req.id].used_links = (
                    self.rng.choice(pick) if req.id in reroute else pick[0])
            # detours must match current adjacent hosts
            for j in range(1, len(req.chain) + 1):
                gene = ind.vnf_genes[(req.id, j)]
                prev, nxt = hosts[j - 1], hosts[j + 1]
                for l in list(gene.assigned_backups):
                    b = ind.backup_genes[l]
                    detour = gene.backup_access_links.get(l, ())
                    if (self._detour_valid(prev, b.location, nxt, detour)
                            and self._detour_delay_ok(ind, req, j, detour)):
                        continue
                    fixed = self.catalog.detour_candidates(prev, b.location, nxt, limit=4)
                    fixed = [d for d in fixed if self._detour_delay_ok(ind, req, j, d)]
                    if fixed:
                        gene.backup_access_links[l] = fixed[0]
                    else:
                        self._drop_assignment(ind, (req.id, j), l)
        return not validate_solution_shape(ind.decode(), self.net, self.reqs)

    def _walk_matches(self, req: ServiceRequest, hosts: list[int],
                      walk: tuple[int, ...]) -> bool:
        if not is_connected_walk(self.net, req.source, walk, req.destination):
            return False
        nodes = self.net.walk_nodes(req.source, walk)
        cursor = 0
        for target in hosts[1:]:
            while cursor < len(nodes) and nodes[cursor] != target:
                cursor += 1
            if cursor >= len(nodes):
                return False
        return True

    def _detour_valid(self, prev: int, bhost: int, nxt: int,
                      detour: tuple[int, ...]) -> bool:
        if not detour:
            return False
        if not is_connected_walk(self.net, prev, detour, nxt):
            return False
        return bhost in self.net.walk_nodes(prev, detour)


def diversity(population: Sequence[Individual]) -> float:
    """Normalized mean pairwise fitness gap; zero iff all fitnesses equal."""
    size = len(population)
    if size < 2:
        return 0.0
    f_max = max(abs(ind.fitness) for ind in population)
    if f_max == 0.0:
        return 0.0
    total = 0.0
    for a in range(size - 1):
        for b in range(a + 1, size):
            total += abs(population[a].fitness - population[b].fitness) / f_max
    return 2.0 / (size * (size - 1)) * total


def run_rcg(net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
            params: GaParams | None = None,
            telemetry: Callable[[dict], None] | None = None,
            initial_population: list[Individual] | None = None) -> RcgResult:
    params = params or GaParams()
    solver = RcgSolver(net, reqs, params)
    population = initial_population if initial_population is not None \
        else solver.init_population()
    for ind in population:
        solver.score(ind)

    ne = params.elite_count
    nc = (params.population_size - ne) // 2
    history: list[float] = []
    stall = 0
    generations = 0
    for gen in range(1, params.generation_cap + 1):
        generations = gen
        ordered = sorted(population, key=lambda x: (-x.fitness, x.uid))
        elites = ordered[:ne]
        pairs = solver.rank_select(population, nc)
        offspring: list[Individual] = []
        for pa, pb in pairs:
            c, d = solver.crossover(pa, pb)
            offspring.append(solver.mutate_and_repair(c))
            offspring.append(solver.mutate_and_repair(d))
        for ind in offspring:
            solver.score(ind)
        population = elites + offspring
        best = max(population, key=lambda x: (x.fitness, -x.uid))
        d_p = diversity(population)
        history.append(best.fitness)
        if telemetry is not None:
            telemetry({"generation": gen, "best_fitness": best.fitness,
                       "mean_fitness": sum(p.fitness for p in population) / len(population),
                       "diversity": d_p,
                       "feasible_count": sum(1 for p in population if p.feasible)})
        if d_p < params.convergence_threshold:
            stall += 1
            if stall >= params.stall_generations:
                break
        else:
            stall = 0

    feasible = [p for p in population if p.feasible]
    if feasible:
        chosen = max(feasible, key=lambda x: (x.fitness, -x.uid))
        ok = True
    else:
        chosen = min(population, key=lambda x: (x.penalty, x.uid))
        ok = False
    sol = chosen.decode()
    met = constraints.metrics(sol, net, reqs, alpha=params.objective_alpha)
    return RcgResult(solution=sol, metrics=met, generations=generations,
                     feasible=ok, best_fitness_history=history)
