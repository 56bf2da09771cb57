import json

import pytest

from sfcplan.model import (BackupVnf, ScenarioError, Solution,
                           is_connected_walk, scenario_from_dict,
                           scenario_to_dict, solution_from_dict,
                           solution_to_dict, split_walk,
                           validate_solution_shape, walk_loop_violations)

from conftest import (_example_data, example_layout_dp, example_layout_np,
                      example_layout_sp, toy_instance)


def test_undirected_expansion_doubles_links(example_scenario):
    net, _ = example_scenario
    assert len(net.links) == 10  # 5 undirected links
    for lid, link in net.links.items():
        rev = net.reverse_of[lid]
        assert net.links[rev].tail == link.head
        assert net.links[rev].head == link.tail


def test_scenario_round_trip(example_scenario):
    net, reqs = example_scenario
    doc = scenario_to_dict(net, reqs)
    net2, reqs2 = scenario_from_dict(json.loads(json.dumps(doc)))
    assert scenario_to_dict(net2, reqs2) == doc


def test_scenario_validation_errors():
    data = _example_data()
    bad = json.loads(json.dumps(data))
    bad["servers"][0]["reliability"] = 1.5
    with pytest.raises(ScenarioError):
        scenario_from_dict(bad)
    bad = json.loads(json.dumps(data))
    bad["services"][0]["source"] = 99
    with pytest.raises(ScenarioError):
        scenario_from_dict(bad)
    bad = json.loads(json.dumps(data))
    bad["services"][0]["chain"][0]["type"] = "undeclared"
    with pytest.raises(ScenarioError):
        scenario_from_dict(bad)
    bad = json.loads(json.dumps(data))
    bad["services"][0]["min_reliability"] = 0.0
    with pytest.raises(ScenarioError):
        scenario_from_dict(bad)


def test_split_walk_matches_hosts_in_order(example_scenario):
    net, reqs = example_scenario
    sol = example_layout_np()
    segs = split_walk(net, sol, reqs[0])
    assert segs is not None
    # hosts 1,2,3 on walk 1->2->3: four segments (incl. empty head/tail)
    assert len(segs) == len(reqs[0].chain) + 1
    flat = tuple(m for seg in segs for m in seg)
    assert flat == sol.primary_paths[1]


def test_split_walk_rejects_wrong_order(example_scenario):
    net, reqs = example_scenario
    sol = Solution(placements={(1, 1): 3, (1, 2): 2, (1, 3): 1},
                   primary_paths={1: (0, 2)})
    assert split_walk(net, sol, reqs[0]) is None


def test_walk_loop_violations(example_scenario):
    net, _ = example_scenario
    assert walk_loop_violations(net, (0, 2)) == []
    assert walk_loop_violations(net, (0, 2, 0)) != []   # repeated link
    assert walk_loop_violations(net, (0, 1)) != []      # both directions


def test_is_connected_walk(example_scenario):
    net, _ = example_scenario
    assert is_connected_walk(net, 1, (0, 2), 3)
    assert not is_connected_walk(net, 1, (2,), 3)
    assert not is_connected_walk(net, 1, (0, 2), 4)


def test_solution_round_trip(example_scenario):
    for sol in (example_layout_np(), example_layout_dp(), example_layout_sp()):
        doc = solution_to_dict(sol)
        back = solution_from_dict(json.loads(json.dumps(doc)))
        assert solution_to_dict(back) == doc


def test_duplicate_placement_rejected():
    doc = solution_to_dict(example_layout_np())
    doc["placements"].append(
        {"service": 1, "position": 1, "server": 2})  # conflicts with server 1
    with pytest.raises(ScenarioError):
        solution_from_dict(doc)


def test_validate_solution_shape_flags_problems(example_scenario):
    net, reqs = example_scenario
    ok = example_layout_dp()
    assert validate_solution_shape(ok, net, reqs) == []
    bad = Solution(placements={(1, 1): 99, (1, 2): 2, (1, 3): 3,
                               (2, 1): 2, (2, 2): 3},
                   primary_paths={1: (0, 2), 2: (0, 2)})
    assert validate_solution_shape(bad, net, reqs) != []
    missing_path = Solution(placements=example_layout_np().placements,
                            primary_paths={1: (0, 2)})
    assert any("missing" in v for v in
               validate_solution_shape(missing_path, net, reqs))


def test_toy_instances_build():
    for seed in range(5):
        net, reqs = toy_instance(seed)
        assert 1 <= len(reqs) <= 2
        assert sum(len(r.chain) for r in reqs) <= 3
        assert len(net.servers) == 3
