"""Comparison schemes: dedicated protection, no protection, random placement."""
from __future__ import annotations

import random
import time
from dataclasses import replace
from typing import Sequence

from . import constraints
from .exact import ExactResult, Mode, SearchConfig, SearchStats, solve_exact
from .model import BackupVnf, ServiceRequest, Solution, SubstrateNetwork
from .paths import PathCatalog


def solve_dp(net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
             cfg: SearchConfig | None = None) -> ExactResult:
    """Exact search restricted to one dedicated backup per protected VNF."""
    cfg = replace(cfg, mode=Mode.DEDICATED_PROTECTION) if cfg else \
        SearchConfig(mode=Mode.DEDICATED_PROTECTION)
    return solve_exact(net, reqs, cfg)


def solve_np(net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
             cfg: SearchConfig | None = None) -> ExactResult:
    """Exact search with no backups and the reliability constraint removed."""
    cfg = replace(cfg, mode=Mode.NO_PROTECTION) if cfg else \
        SearchConfig(mode=Mode.NO_PROTECTION)
    return solve_exact(net, reqs, cfg)


def solve_rp(net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
             cfg: SearchConfig | None = None, rng_seed: int = 0) -> ExactResult:
    """Random placement with shortest-path routing.

    Primaries land on uniformly random capacity-feasible servers; each VNF
    independently draws a backup with probability one half on a random host.
    Only routing constraints are enforced; the returned solution is evaluated
    honestly and may be infeasible on every other constraint family.
    """
    cfg = cfg or SearchConfig()
    rng = random.Random(rng_seed)
    start = time.perf_counter()
    catalog = PathCatalog(net, k=cfg.k_paths)
    servers = sorted(net.servers)
    server_load = {k: 0.0 for k in net.servers}

    placements: dict[tuple[int, int], int] = {}
    walks: dict[int, tuple[int, ...]] = {}
    for req in sorted(reqs, key=lambda r: r.id):
        walk = None
        for _attempt in range(200):
            combo = []
            for vnf in req.chain:
                feasible = [k for k in servers
                            if server_load[k] + vnf.cpu_demand < net.servers[k].capacity]
                combo.append(rng.choice(feasible if feasible else servers))
            waypoints = [req.source, *combo, req.destination]
            candidates = list(catalog.walk_candidates(waypoints, limit=4))
            if candidates:
                walk = rng.choice(candidates)
                break
        if walk is None:
            raise RuntimeError(f"service {req.id}: no routable random placement found")
        for j, vnf in enumerate(req.chain, start=1):
            placements[(req.id, j)] = combo[j - 1]
            server_load[combo[j - 1]] += vnf.cpu_demand
        walks[req.id] = walk

    backups: list[BackupVnf] = []
    assignments: set[tuple[int, int, int]] = set()
    backup_paths: dict[tuple[int, int], tuple[int, ...]] = {}
    for req in sorted(reqs, key=lambda r: r.id):
        hosts = [req.source] + [placements[(req.id, j)]
                                for j in range(1, len(req.chain) + 1)] + [req.destination]
        for j, vnf in enumerate(req.chain, start=1):
            if rng.random() >= 0.5:
                continue
            host = rng.choice(servers)
            detours = catalog.detour_candidates(hosts[j - 1], host, hosts[j + 1], limit=4)
            if not detours:
                continue
            backup = BackupVnf(id=len(backups), vnf_type=vnf.vnf_type, host=host,
                               cpu_reservation=vnf.cpu_demand)
            backups.append(backup)
            assignments.add((req.id, j, backup.id))
            backup_paths[(req.id, backup.id)] = rng.choice(detours)

    sol = Solution(placements=placements, backups=tuple(backups),
                   assignments=frozenset(assignments),
                   primary_paths=walks, backup_paths=backup_paths)
    report, met, _ = constraints.evaluate(sol, net, reqs, alpha=cfg.alpha,
                                          tolerance=cfg.tolerance)
    stats = SearchStats(nodes_expanded=0, incumbents=1, proven_optimal=False,
                        wall_time=time.perf_counter() - start)
    return ExactResult(sol, met, stats, report.feasible)
