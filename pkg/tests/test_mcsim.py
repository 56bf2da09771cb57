import pytest

from sfcplan.mcsim import TrialConfig, estimate_reliability
from sfcplan.model import BackupVnf, Solution, scenario_from_dict
from sfcplan.reliability import solve_reliability


def _single_vnf_scenario(n_services, thetas, mttrs, backup_theta=0.96):
    """n services, one VNF each, all sharing one standby on the last server."""
    servers = [{"id": k + 1, "capacity": 5, "reliability": thetas[k],
                "mttr": mttrs[k], "mtbf": 1000.0}
               for k in range(n_services)]
    bid = n_services + 1
    servers.append({"id": bid, "capacity": 5, "reliability": backup_theta,
                    "mttr": 10.0, "mtbf": 1000.0})
    hub = bid + 1
    servers.append({"id": hub, "capacity": 5, "reliability": 0.95,
                    "mttr": 10.0, "mtbf": 1000.0})
    links = [{"id": i, "a": s["id"], "b": hub, "bandwidth": 50.0,
              "delay": 10.0} for i, s in enumerate(servers[:-1])]
    services = [{"id": k + 1, "source": k + 1, "destination": hub,
                 "chain": [{"type": "f1", "cpu": 1.0}], "bandwidth": 1.0,
                 "max_delay": 90.0, "min_reliability": 0.5}
                for k in range(n_services)]
    net, reqs = scenario_from_dict({
        "vnf_types": ["f1"], "servers": servers, "links": links,
        "services": services})
    # directed ids: undirected i -> (2i: server->hub, 2i+1: hub->server)
    b_idx = n_services  # undirected index of the standby host's link
    sol = Solution(
        placements={(k + 1, 1): k + 1 for k in range(n_services)},
        backups=(BackupVnf(id=0, vnf_type="f1", host=bid,
                           cpu_reservation=1.0),),
        assignments=frozenset((k + 1, 1, 0) for k in range(n_services)),
        primary_paths={k + 1: (2 * k,) for k in range(n_services)},
        backup_paths={(k + 1, 0): (2 * k, 2 * b_idx + 1, 2 * b_idx)
                      for k in range(n_services)})
    return net, reqs, sol


def test_trial_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(trials=0)
    with pytest.raises(ValueError):
        TrialConfig(contention_rule="nope")


def test_half_width_undefined_for_tiny_samples():
    net, reqs, sol = _single_vnf_scenario(1, [0.92], [10.0])
    est = estimate_reliability(sol, net, reqs, TrialConfig(trials=50))
    p, hw = est.per_service[1]
    assert hw is None
    est = estimate_reliability(sol, net, reqs, TrialConfig(trials=10_000))
    p, hw = est.per_service[1]
    assert hw is not None and hw > 0


def test_single_user_matches_dedicated_formula():
    net, reqs, sol = _single_vnf_scenario(1, [0.92], [10.0])
    expected = 1 - (1 - 0.92) * (1 - 0.96)
    est = estimate_reliability(sol, net, reqs,
                               TrialConfig(trials=400_000, rng_seed=1))
    p, hw = est.per_service[1]
    assert p == pytest.approx(expected, abs=4 * hw)


def test_dedicated_rule_ignores_contention():
    net, reqs, sol = _single_vnf_scenario(2, [0.92, 0.90], [8.0, 12.0])
    est = estimate_reliability(
        sol, net, reqs, TrialConfig(trials=400_000, rng_seed=2,
                                    contention_rule="dedicated"))
    for sid, rp in ((1, 0.92), (2, 0.90)):
        expected = 1 - (1 - rp) * (1 - 0.96)
        p, hw = est.per_service[sid]
        assert p == pytest.approx(expected, abs=4 * hw)


def test_two_sharers_match_analytic_contention():
    net, reqs, sol = _single_vnf_scenario(2, [0.92, 0.90], [8.0, 12.0])
    rel = solve_reliability(sol, net, reqs)
    est = estimate_reliability(sol, net, reqs,
                               TrialConfig(trials=600_000, rng_seed=3))
    for sid in (1, 2):
        p, hw = est.per_service[sid]
        assert p == pytest.approx(rel.per_service[sid], abs=0.005)


def test_three_sharers_stay_within_band():
    net, reqs, sol = _single_vnf_scenario(
        3, [0.92, 0.90, 0.94], [8.0, 12.0, 10.0])
    rel = solve_reliability(sol, net, reqs)
    est = estimate_reliability(sol, net, reqs,
                               TrialConfig(trials=600_000, rng_seed=4))
    for sid in (1, 2, 3):
        p, hw = est.per_service[sid]
        assert p == pytest.approx(rel.per_service[sid], abs=0.01)


def test_per_vnf_estimates_exposed():
    net, reqs, sol = _single_vnf_scenario(2, [0.92, 0.90], [8.0, 12.0])
    est = estimate_reliability(sol, net, reqs,
                               TrialConfig(trials=10_000, rng_seed=5))
    assert set(est.per_vnf) == {(1, 1), (2, 1)}
    assert est.trials == 10_000
