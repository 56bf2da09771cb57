"""Analytic reliability of chains under no/dedicated/shared protection.

A shared backup's availability to one of its users is discounted by the
probability that a co-sharer holds it, weighted by MTTR ratios. The
discount sum is evaluated with co-sharers' primary reliabilities by
default (this reproduces the worked small-network figures); an optional
fixed-point mode iterates the mutually recursive definition to 1e-9.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .model import ServiceRequest, Solution, SubstrateNetwork

CONVERGENCE_TOL = 1e-9
MAX_SWEEPS = 100


@dataclass(frozen=True)
class GroupMember:
    service: int
    position: int
    primary_reliability: float
    mttr: float


@dataclass(frozen=True)
class SharingGroup:
    backup_id: int
    backup_reliability: float
    members: tuple[GroupMember, ...]


@dataclass
class ReliabilityResult:
    per_vnf: dict[tuple[int, int], float] = field(default_factory=dict)
    per_service: dict[int, float] = field(default_factory=dict)
    iterations: int = 0
    converged: bool = True


def dp_reliability(r_primary: float, r_backup: float) -> float:
    """Reliability of a VNF with one dedicated backup."""
    for v in (r_primary, r_backup):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"reliability {v} outside [0, 1]")
    return 1.0 - (1.0 - r_primary) * (1.0 - r_backup)


def sharing_probability(member: GroupMember, group: SharingGroup,
                        reliabilities: dict[tuple[int, int], float] | None = None) -> float:
    """Probability the shared backup is free for `member` when needed.

    `reliabilities` overrides the co-sharers' reliabilities used in the
    contention sum (fixed-point sweeps pass the previous sweep's values);
    by default each co-sharer contributes its primary reliability.
    """
    if member not in group.members:
        raise ValueError(f"member {member} not in sharing group {group.backup_id}")
    loss = 0.0
    for other in group.members:
        if other is member:
            continue
        r_other = other.primary_reliability
        if reliabilities is not None:
            r_other = reliabilities.get((other.service, other.position), r_other)
        loss += other.mttr / (member.mttr + other.mttr) * (1.0 - r_other)
    return min(1.0, max(0.0, 1.0 - loss))


def sp_vnf_reliability(member: GroupMember, group: SharingGroup,
                       reliabilities: dict[tuple[int, int], float] | None = None,
                       r_primary: float | None = None) -> float:
    """Reliability of one member of a sharing group (shared-protection formula)."""
    rp = member.primary_reliability if r_primary is None else r_primary
    phi = sharing_probability(member, group, reliabilities)
    return rp + (1.0 - rp) * group.backup_reliability * phi


def sharing_groups(sol: Solution, net: SubstrateNetwork,
                   reqs: Sequence[ServiceRequest]) -> list[SharingGroup]:
    groups = []
    for b in sorted(sol.backups, key=lambda b: b.id):
        members = []
        for (i, j) in sol.users_of(b.id):
            host = net.servers[sol.placements[(i, j)]]
            members.append(GroupMember(service=i, position=j,
                                       primary_reliability=host.reliability,
                                       mttr=host.mttr))
        groups.append(SharingGroup(backup_id=b.id,
                                   backup_reliability=net.servers[b.host].reliability,
                                   members=tuple(members)))
    return groups


def solve_reliability(sol: Solution, net: SubstrateNetwork, reqs: Sequence[ServiceRequest],
                      fixed_point: bool = False) -> ReliabilityResult:
    """Per-VNF and per-service reliability of a shape-valid solution.

    A VNF with several assigned backups composes them sequentially in
    ascending backup id: each stage's output feeds the next stage as its
    primary reliability.
    """
    groups = {g.backup_id: g for g in sharing_groups(sol, net, reqs)}
    members = {(g.backup_id, m.service, m.position): m
               for g in groups.values() for m in g.members}
    primary = {}
    for req in reqs:
        for j in range(1, len(req.chain) + 1):
            key = (req.id, j)
            primary[key] = net.servers[sol.placements[key]].reliability

    def sweep(prev: dict[tuple[int, int], float] | None) -> dict[tuple[int, int], float]:
        out = {}
        for req in reqs:
            for j in range(1, len(req.chain) + 1):
                key = (req.id, j)
                r = primary[key]
                for l in sol.backups_of(req.id, j):
                    g = groups[l]
                    m = members[(l, req.id, j)]
                    r = sp_vnf_reliability(m, g, reliabilities=prev, r_primary=r)
                out[key] = r
        return out

    per_vnf = sweep(None)
    iterations = 1
    converged = True
    if fixed_point:
        current = per_vnf
        converged = False
        for _ in range(MAX_SWEEPS - 1):
            nxt = sweep(current)
            iterations += 1
            if max((abs(nxt[k] - current[k]) for k in nxt), default=0.0) <= CONVERGENCE_TOL:
                current = nxt
                converged = True
                break
            current = nxt
        per_vnf = current

    per_service = {}
    for req in reqs:
        theta = 1.0
        for j in range(1, len(req.chain) + 1):
            theta *= per_vnf[(req.id, j)]
        per_service[req.id] = theta
    return ReliabilityResult(per_vnf=per_vnf, per_service=per_service,
                             iterations=iterations, converged=converged)
