"""Domain types for substrate networks, service requests and candidate solutions.

Topologies are stored undirected in scenario files and expanded to directed
link pairs on load; all solver-side reasoning is over directed links.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class ScenarioError(ValueError):
    """Scenario file is malformed or violates a model invariant."""


@dataclass(frozen=True)
class Server:
    id: int
    capacity: float
    reliability: float
    mttr: float
    mtbf: float = 1000.0

    def __post_init__(self):
        if not 0.0 < self.reliability <= 1.0:
            raise ScenarioError(f"server {self.id}: reliability must be in (0, 1], got {self.reliability}")
        if self.capacity <= 0:
            raise ScenarioError(f"server {self.id}: capacity must be positive")
        if self.mttr <= 0:
            raise ScenarioError(f"server {self.id}: mttr must be positive")


@dataclass(frozen=True)
class Link:
    id: int
    tail: int
    head: int
    bandwidth: float
    delay: float

    def __post_init__(self):
        if self.tail == self.head:
            raise ScenarioError(f"link {self.id}: self-loops are not allowed")
        if self.bandwidth <= 0:
            raise ScenarioError(f"link {self.id}: bandwidth must be positive")
        if self.delay < 0:
            raise ScenarioError(f"link {self.id}: delay must be non-negative")


class SubstrateNetwork:
    """Directed graph of servers and links, with adjacency indexes."""

    def __init__(self, servers: Iterable[Server], links: Iterable[Link]):
        self.servers: dict[int, Server] = {s.id: s for s in servers}
        self.links: dict[int, Link] = {l.id: l for l in links}
        for l in self.links.values():
            if l.tail not in self.servers or l.head not in self.servers:
                raise ScenarioError(f"link {l.id}: endpoint does not resolve to a server")
        self._out: dict[int, list[Link]] = {k: [] for k in self.servers}
        self._in: dict[int, list[Link]] = {k: [] for k in self.servers}
        for l in self.links.values():
            self._out[l.tail].append(l)
            self._in[l.head].append(l)
        # opposite-direction partner for loop-freedom checks
        by_pair = {(l.tail, l.head): l.id for l in self.links.values()}
        self.reverse_of: dict[int, int | None] = {
            l.id: by_pair.get((l.head, l.tail)) for l in self.links.values()
        }

    def out_links(self, server_id: int) -> list[Link]:
        return self._out[server_id]

    def in_links(self, server_id: int) -> list[Link]:
        return self._in[server_id]

    @property
    def total_link_bandwidth(self) -> float:
        return sum(l.bandwidth for l in self.links.values())

    @property
    def total_cpu_capacity(self) -> float:
        return sum(s.capacity for s in self.servers.values())

    def path_delay(self, link_ids: Sequence[int]) -> float:
        return sum(self.links[m].delay for m in link_ids)

    def walk_nodes(self, start: int, link_ids: Sequence[int]) -> list[int]:
        nodes = [start]
        for m in link_ids:
            nodes.append(self.links[m].head)
        return nodes


@dataclass(frozen=True)
class VnfSpec:
    vnf_type: int
    cpu_demand: float

    def __post_init__(self):
        if self.cpu_demand <= 0:
            raise ScenarioError(f"vnf of type {self.vnf_type}: cpu demand must be positive")


@dataclass(frozen=True)
class ServiceRequest:
    id: int
    source: int
    destination: int
    chain: tuple[VnfSpec, ...]
    bandwidth: float
    max_delay: float
    min_reliability: float

    def __post_init__(self):
        if not self.chain:
            raise ScenarioError(f"service {self.id}: chain must be non-empty")
        if not 0.0 < self.min_reliability < 1.0:
            raise ScenarioError(f"service {self.id}: min_reliability must be in (0, 1)")
        if self.max_delay <= 0:
            raise ScenarioError(f"service {self.id}: max_delay must be positive")
        if self.bandwidth <= 0:
            raise ScenarioError(f"service {self.id}: bandwidth must be positive")


@dataclass(frozen=True)
class BackupVnf:
    id: int
    vnf_type: int
    host: int
    cpu_reservation: float


@dataclass(frozen=True)
class Solution:
    """A candidate placement/routing, feasible or not.

    ``placements`` maps (service id, 1-based chain position) to a server id.
    ``primary_paths`` maps a service id to an ordered tuple of directed link
    ids forming one walk source -> hosts in chain order -> destination.
    ``backup_paths`` maps (service id, backup id) to the detour walk used
    when the corresponding primary fails.
    """
    placements: Mapping[tuple[int, int], int]
    backups: tuple[BackupVnf, ...] = ()
    assignments: frozenset[tuple[int, int, int]] = frozenset()
    primary_paths: Mapping[int, tuple[int, ...]] = field(default_factory=dict)
    backup_paths: Mapping[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)

    def backup_by_id(self, backup_id: int) -> BackupVnf:
        for b in self.backups:
            if b.id == backup_id:
                return b
        raise KeyError(backup_id)

    def backups_of(self, service_id: int, position: int) -> list[int]:
        return sorted(l for (i, j, l) in self.assignments if i == service_id and j == position)

    def users_of(self, backup_id: int) -> list[tuple[int, int]]:
        return sorted((i, j) for (i, j, l) in self.assignments if l == backup_id)


def chain_hosts(sol: Solution, req: ServiceRequest) -> list[int]:
    """Hosts of the request's chain in order, bracketed by source/destination."""
    hosts = [sol.placements[(req.id, j)] for j in range(1, len(req.chain) + 1)]
    return [req.source] + hosts + [req.destination]


def split_walk(net: SubstrateNetwork, sol: Solution, req: ServiceRequest) -> list[list[int]] | None:
    """Split a service's primary walk into per-position segments.

    Segment j (0-based index j) carries the links between the (j-1)-th and
    j-th waypoint of ``chain_hosts``. Waypoints are matched greedily against
    the walk's node sequence (first occurrence at or after the previous
    match). Returns None when the walk does not visit the hosts in order.
    """
    walk = sol.primary_paths.get(req.id, ())
    nodes = net.walk_nodes(req.source, walk)
    waypoints = chain_hosts(sol, req)
    if nodes[0] != waypoints[0] or nodes[-1] != waypoints[-1]:
        return None
    cut = 0
    cuts = [0]
    for target in waypoints[1:]:
        while cut < len(nodes) and nodes[cut] != target:
            cut += 1
        if cut >= len(nodes):
            return None
        cuts.append(cut)
    if cuts[-1] != len(nodes) - 1:
        return None
    return [list(walk[cuts[t]:cuts[t + 1]]) for t in range(len(waypoints) - 1)]


def is_connected_walk(net: SubstrateNetwork, start: int, link_ids: Sequence[int], end: int) -> bool:
    at = start
    for m in link_ids:
        link = net.links.get(m)
        if link is None or link.tail != at:
            return False
        at = link.head
    return at == end


def walk_loop_violations(net: SubstrateNetwork, link_ids: Sequence[int]) -> list[str]:
    """Repeated directed links, or use of both directions of one physical link."""
    out = []
    seen: set[int] = set()
    for m in link_ids:
        if m in seen:
            out.append(f"link {m} repeated")
        rev = net.reverse_of.get(m)
        if rev is not None and rev in seen:
            out.append(f"links {rev} and {m} traverse one physical link in both directions")
        seen.add(m)
    return out


def validate_solution_shape(sol: Solution, net: SubstrateNetwork,
                            reqs: Sequence[ServiceRequest]) -> list[str]:
    """Structural validity gate; returns one message per violation."""
    violations: list[str] = []
    backup_ids = {b.id for b in sol.backups}
    for req in reqs:
        for j in range(1, len(req.chain) + 1):
            host = sol.placements.get((req.id, j))
            if host is None:
                violations.append(f"service {req.id} position {j}: no placement (one-server-per-VNF rule)")
            elif host not in net.servers:
                violations.append(f"service {req.id} position {j}: unknown server {host}")
    extra = [key for key in sol.placements if key not in
             {(r.id, j) for r in reqs for j in range(1, len(r.chain) + 1)}]
    for key in sorted(extra):
        violations.append(f"placement {key} does not correspond to any chain position")
    if violations:
        return violations

    for req in reqs:
        walk = sol.primary_paths.get(req.id)
        if walk is None:
            violations.append(f"service {req.id}: missing primary path")
            continue
        if not is_connected_walk(net, req.source, walk, req.destination):
            violations.append(f"service {req.id}: path not a connected walk from source to destination")
            continue
        if split_walk(net, sol, req) is None:
            violations.append(f"service {req.id}: path does not visit chain hosts in order")

    for b in sol.backups:
        if b.host not in net.servers:
            violations.append(f"backup {b.id}: unknown host {b.host}")
    for (i, j, l) in sorted(sol.assignments):
        if l not in backup_ids:
            violations.append(f"assignment ({i},{j}) references unknown backup {l}")
        if (i, j) not in sol.placements:
            violations.append(f"assignment backup {l} references unknown VNF ({i},{j})")
    for (i, l), path in sorted(sol.backup_paths.items()):
        for m in path:
            if m not in net.links:
                violations.append(f"detour for service {i} backup {l}: unknown link {m}")
    return violations


# --- scenario files -------------------------------------------------------

def _expand_undirected(raw_links: list[dict]) -> list[Link]:
    links = []
    for idx, entry in enumerate(raw_links):
        a, b = entry["a"], entry["b"]
        links.append(Link(id=2 * idx, tail=a, head=b,
                          bandwidth=entry["bandwidth"], delay=entry["delay"]))
        links.append(Link(id=2 * idx + 1, tail=b, head=a,
                          bandwidth=entry["bandwidth"], delay=entry["delay"]))
    return links


def scenario_from_dict(doc: dict) -> tuple[SubstrateNetwork, list[ServiceRequest]]:
    try:
        servers = [Server(id=s["id"], capacity=s["capacity"], reliability=s["reliability"],
                          mttr=s["mttr"], mtbf=s.get("mtbf", 1000.0))
                   for s in doc["servers"]]
        links = _expand_undirected(doc["links"])
        vnf_types = set(doc.get("vnf_types", []))
        reqs = []
        for s in doc["services"]:
            chain = tuple(VnfSpec(vnf_type=v["type"], cpu_demand=v["cpu"]) for v in s["chain"])
            reqs.append(ServiceRequest(
                id=s["id"], source=s["source"], destination=s["destination"],
                chain=chain, bandwidth=s["bandwidth"], max_delay=s["max_delay"],
                min_reliability=s["min_reliability"]))
    except KeyError as exc:
        raise ScenarioError(f"scenario missing field {exc}") from exc
    net = SubstrateNetwork(servers, links)
    for req in reqs:
        if req.source not in net.servers or req.destination not in net.servers:
            raise ScenarioError(f"service {req.id}: source/destination not in network")
        for v in req.chain:
            if vnf_types and v.vnf_type not in vnf_types:
                raise ScenarioError(f"service {req.id}: vnf type {v.vnf_type} not declared")
    return net, reqs


def scenario_to_dict(net: SubstrateNetwork, reqs: Sequence[ServiceRequest]) -> dict:
    undirected = []
    for l in sorted(net.links.values(), key=lambda l: l.id):
        if l.id % 2 == 0:
            undirected.append({"id": l.id // 2, "a": l.tail, "b": l.head,
                               "bandwidth": l.bandwidth, "delay": l.delay})
    return {
        "servers": [{"id": s.id, "capacity": s.capacity, "reliability": s.reliability,
                     "mttr": s.mttr, "mtbf": s.mtbf}
                    for s in sorted(net.servers.values(), key=lambda s: s.id)],
        "links": undirected,
        "services": [{"id": r.id, "source": r.source, "destination": r.destination,
                      "chain": [{"type": v.vnf_type, "cpu": v.cpu_demand} for v in r.chain],
                      "bandwidth": r.bandwidth, "max_delay": r.max_delay,
                      "min_reliability": r.min_reliability}
                     for r in sorted(reqs, key=lambda r: r.id)],
        "vnf_types": sorted({v.vnf_type for r in reqs for v in r.chain}),
    }


def load_scenario(path) -> tuple[SubstrateNetwork, list[ServiceRequest]]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario {path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(doc)


def save_scenario(path, net: SubstrateNetwork, reqs: Sequence[ServiceRequest]) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(net, reqs), fh, indent=2)


# --- solution files -------------------------------------------------------

def solution_to_dict(sol: Solution) -> dict:
    return {
        "placements": [{"service": i, "position": j, "server": k}
                       for (i, j), k in sorted(sol.placements.items())],
        "backups": [{"id": b.id, "type": b.vnf_type, "host": b.host,
                     "cpu_reservation": b.cpu_reservation} for b in sol.backups],
        "assignments": [{"service": i, "position": j, "backup": l}
                        for (i, j, l) in sorted(sol.assignments)],
        "primary_paths": {str(i): list(p) for i, p in sorted(sol.primary_paths.items())},
        "backup_paths": [{"service": i, "backup": l, "links": list(p)}
                         for (i, l), p in sorted(sol.backup_paths.items())],
    }


def solution_from_dict(doc: dict) -> Solution:
    placements: dict[tuple[int, int], int] = {}
    for entry in doc.get("placements", []):
        key = (entry["service"], entry["position"])
        if key in placements and placements[key] != entry["server"]:
            raise ScenarioError(
                f"service {key[0]} position {key[1]} placed on two servers "
                "(one-server-per-VNF rule)")
        placements[key] = entry["server"]
    backups = tuple(BackupVnf(id=b["id"], vnf_type=b["type"], host=b["host"],
                              cpu_reservation=b.get("cpu_reservation", 0.0))
                    for b in doc.get("backups", []))
    assignments = frozenset((a["service"], a["position"], a["backup"])
                            for a in doc.get("assignments", []))
    primary = {int(i): tuple(p) for i, p in doc.get("primary_paths", {}).items()}
    backup_paths = {(e["service"], e["backup"]): tuple(e["links"])
                    for e in doc.get("backup_paths", [])}
    return Solution(placements=placements, backups=backups, assignments=assignments,
                    primary_paths=primary, backup_paths=backup_paths)


def load_solution(path) -> Solution:
    with open(path) as fh:
        return solution_from_dict(json.load(fh))


def save_solution(path, sol: Solution) -> None:
    with open(path, "w") as fh:
        json.dump(solution_to_dict(sol), fh, indent=2)
