"""Built-in benchmark scenarios and a random scenario generator."""

from __future__ import annotations

import random

from .model import ScenarioError, SubstrateNetwork, scenario_from_dict

VNF_TYPES = ("f1", "f2", "f3", "f4")

# 14 undirected edges over 8 nodes; every node has degree >= 3 so that
# single-failure detours usually exist.
_EDGES_8 = [
    (1, 2), (2, 3), (3, 8), (7, 8), (6, 7), (5, 6), (1, 5),
    (2, 5), (1, 6), (3, 4), (4, 7), (4, 5), (4, 8), (2, 6),
]

_THETA_8 = {1: 0.94, 2: 0.92, 3: 0.95, 4: 0.96,
            5: 0.93, 6: 0.95, 7: 0.91, 8: 0.96}

_MTTR_8 = {1: 12.0, 2: 8.0, 3: 10.0, 4: 6.0,
           5: 9.0, 6: 11.0, 7: 7.0, 8: 10.0}


def builtin_scenario_8node() -> tuple[SubstrateNetwork, list]:
    """Small benchmark: 8 servers, 14 undirected links, four demands."""
    data = {
        "vnf_types": list(VNF_TYPES),
        "servers": [
            {"id": k, "capacity": 5, "reliability": _THETA_8[k],
             "mttr": _MTTR_8[k], "mtbf": 1000.0}
            for k in sorted(_THETA_8)
        ],
        "links": [
            {"id": i, "a": a, "b": b, "bandwidth": 20.0, "delay": 10.0}
            for i, (a, b) in enumerate(_EDGES_8)
        ],
        "services": [
            _demand(1, 8, 5, ["f3", "f2", "f1"], 2.0, 80.0),
            _demand(2, 1, 3, ["f2", "f1", "f3"], 4.0, 80.0),
            _demand(3, 1, 8, ["f2", "f3", "f1"], 2.0, 90.0),
            _demand(4, 3, 5, ["f1", "f3", "f2"], 4.0, 90.0),
        ],
    }
    return scenario_from_dict(data)


def _demand(sid, src, dst, chain, bw, max_delay, theta_req=0.98):
    return {
        "id": sid, "source": src, "destination": dst,
        "chain": [{"type": t, "cpu": 1.0} for t in chain],
        "bandwidth": bw, "max_delay": max_delay,
        "min_reliability": theta_req,
    }


def generate_scenario(nodes: int, links: int, services: int,
                      seed: int = 0) -> tuple[SubstrateNetwork, list]:
    """Random connected substrate plus random chain demands.

    The substrate is a uniform spanning tree augmented with extra random
    edges.  Server reliabilities are uniform on [0.90, 0.96]; links carry
    10 ms delay and 20 units of bandwidth; servers hold 4 CPU slots.
    Demands are chains of three VNFs drawn from four types with a 100 ms
    delay budget, so protected routings stay feasible on larger graphs.
    """
    if nodes < 2:
        raise ScenarioError("need at least 2 nodes")
    max_links = nodes * (nodes - 1) // 2
    if links < nodes - 1 or links > max_links:
        raise ScenarioError(
            f"links must be in [{nodes - 1}, {max_links}] for {nodes} nodes")
    rng = random.Random(seed)

    ids = list(range(1, nodes + 1))
    shuffled = ids[:]
    rng.shuffle(shuffled)
    edges = set()
    for i in range(1, nodes):  # random tree: attach to an earlier node
        a = shuffled[i]
        b = shuffled[rng.randrange(i)]
        edges.add((min(a, b), max(a, b)))
    candidates = [(a, b) for i, a in enumerate(ids) for b in ids[i + 1:]
                  if (a, b) not in edges]
    rng.shuffle(candidates)
    edges.update(candidates[:links - len(edges)])

    data = {
        "vnf_types": list(VNF_TYPES),
        "servers": [
            {"id": k, "capacity": 4,
             "reliability": round(rng.uniform(0.90, 0.96), 4),
             "mttr": round(rng.uniform(5.0, 15.0), 2), "mtbf": 1000.0}
            for k in ids
        ],
        "links": [
            {"id": i, "a": a, "b": b, "bandwidth": 20.0, "delay": 10.0}
            for i, (a, b) in enumerate(sorted(edges))
        ],
        "services": [],
    }
    for sid in range(1, services + 1):
        src, dst = rng.sample(ids, 2)
        chain = [rng.choice(VNF_TYPES) for _ in range(3)]
        data["services"].append(
            _demand(sid, src, dst, chain, rng.choice([2.0, 4.0]), 100.0))
    return scenario_from_dict(data)
