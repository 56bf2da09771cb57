"""Shared fixtures: tiny random instances and hand-built layouts."""

from __future__ import annotations

import random

import pytest

from sfcplan.model import BackupVnf, Solution, scenario_from_dict


def toy_instance(seed: int):
    """Random 3-server instance small enough for brute-force enumeration."""
    rng = random.Random(seed)
    servers = [
        {"id": k, "capacity": rng.choice([3, 4, 5]),
         "reliability": round(rng.uniform(0.90, 0.96), 4),
         "mttr": round(rng.uniform(5.0, 15.0), 2), "mtbf": 1000.0}
        for k in (1, 2, 3)
    ]
    links = [
        {"id": i, "a": a, "b": b, "bandwidth": 10.0, "delay": 10.0}
        for i, (a, b) in enumerate([(1, 2), (2, 3), (1, 3)])
    ]
    services = []
    n_services = rng.choice([1, 2])
    budget = 3  # total VNFs capped so brute force stays fast
    for sid in range(1, n_services + 1):
        src, dst = rng.sample([1, 2, 3], 2)
        max_len = min(2, budget - (n_services - sid))
        length = rng.choice(range(1, max_len + 1))
        budget -= length
        chain = [{"type": rng.choice(["f1", "f2"]), "cpu": 1.0}
                 for _ in range(length)]
        services.append({
            "id": sid, "source": src, "destination": dst, "chain": chain,
            "bandwidth": float(rng.choice([1, 2, 3])),
            "max_delay": float(rng.choice([40, 50, 60])),
            "min_reliability": rng.choice([0.90, 0.93, 0.96]),
        })
    return scenario_from_dict({
        "vnf_types": ["f1", "f2"], "servers": servers, "links": links,
        "services": services})


def _example_data():
    # Three chained servers plus a spare; directed link ids follow the
    # undirected index: link i expands to (2i: a->b, 2i+1: b->a).
    return {
        "vnf_types": ["f1"],
        "servers": [
            {"id": 1, "capacity": 6, "reliability": 0.94, "mttr": 10.0},
            {"id": 2, "capacity": 6, "reliability": 0.96, "mttr": 10.0},
            {"id": 3, "capacity": 6, "reliability": 0.92, "mttr": 10.0},
            {"id": 4, "capacity": 6, "reliability": 0.94, "mttr": 10.0},
        ],
        "links": [
            {"id": 0, "a": 1, "b": 2, "bandwidth": 100.0, "delay": 10.0},
            {"id": 1, "a": 2, "b": 3, "bandwidth": 100.0, "delay": 10.0},
            {"id": 2, "a": 1, "b": 4, "bandwidth": 100.0, "delay": 10.0},
            {"id": 3, "a": 3, "b": 4, "bandwidth": 100.0, "delay": 10.0},
            {"id": 4, "a": 2, "b": 4, "bandwidth": 100.0, "delay": 10.0},
        ],
        "services": [
            {"id": 1, "source": 1, "destination": 3,
             "chain": [{"type": "f1", "cpu": 1.0}] * 3,
             "bandwidth": 20.0, "max_delay": 200.0, "min_reliability": 0.8},
            {"id": 2, "source": 1, "destination": 3,
             "chain": [{"type": "f1", "cpu": 1.0}] * 2,
             "bandwidth": 20.0, "max_delay": 200.0, "min_reliability": 0.8},
        ],
    }


@pytest.fixture(scope="session")
def example_scenario():
    return scenario_from_dict(_example_data())


def example_layout_np() -> Solution:
    """Two chains with no protection: hosts (1,2,3) and (2,3)."""
    return Solution(
        placements={(1, 1): 1, (1, 2): 2, (1, 3): 3,
                    (2, 1): 2, (2, 2): 3},
        backups=(), assignments=frozenset(),
        primary_paths={1: (0, 2), 2: (0, 2)},
        backup_paths={})


def example_layout_dp() -> Solution:
    """Each chain's weakest member gets a dedicated standby on server 4."""
    return Solution(
        placements={(1, 1): 1, (1, 2): 2, (1, 3): 3,
                    (2, 1): 2, (2, 2): 3},
        backups=(BackupVnf(id=0, vnf_type="f1", host=4, cpu_reservation=1.0),
                 BackupVnf(id=1, vnf_type="f1", host=4, cpu_reservation=1.0)),
        assignments=frozenset({(1, 3, 0), (2, 2, 1)}),
        primary_paths={1: (0, 2), 2: (0, 2)},
        backup_paths={(1, 0): (8, 7), (2, 1): (8, 7)})


def example_layout_sp() -> Solution:
    """Both weakest members share one standby on server 4; the second
    chain's head sits on server 1 instead of server 2."""
    return Solution(
        placements={(1, 1): 1, (1, 2): 2, (1, 3): 3,
                    (2, 1): 1, (2, 2): 3},
        backups=(BackupVnf(id=0, vnf_type="f1", host=4, cpu_reservation=1.0),),
        assignments=frozenset({(1, 3, 0), (2, 2, 0)}),
        primary_paths={1: (0, 2), 2: (0, 2)},
        backup_paths={(1, 0): (8, 7), (2, 0): (4, 7)})
