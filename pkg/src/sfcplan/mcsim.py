"""Monte Carlo failure simulation for placement solutions.

Samples independent server up/down states and replays the repair
contention between users of a shared standby, giving an estimate of
per-service availability that does not share any code path with the
analytic engine.  Intended as a cross-check oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ServiceRequest, Solution, SubstrateNetwork
from .reliability import sharing_groups

CONTENTION_RULES = ("mttr_weighted", "dedicated")

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class TrialConfig:
    trials: int = 1_000_000
    rng_seed: int = 0
    contention_rule: str = "mttr_weighted"

    def __post_init__(self):
        if self.trials <= 0:
            raise ValueError("trials must be positive")
        if self.contention_rule not in CONTENTION_RULES:
            raise ValueError(
                f"unknown contention rule {self.contention_rule!r}; "
                f"expected one of {CONTENTION_RULES}"
            )


@dataclass(frozen=True)
class McResult:
    per_vnf: dict
    per_service: dict
    trials: int


def _half_width(p_hat: float, n: int):
    # Normal-approximation CI; meaningless for tiny samples.
    if n < 100:
        return None
    return _Z95 * float(np.sqrt(p_hat * (1.0 - p_hat) / n))


def estimate_reliability(sol: Solution, net: SubstrateNetwork,
                         reqs: list[ServiceRequest],
                         config: TrialConfig | None = None) -> McResult:
    """Estimate per-VNF and per-service availability by simulation.

    Each trial draws an up/down state for every server.  A VNF counts
    as available when its primary host is up, or when a standby covers
    it: the standby's host must be up and, under ``mttr_weighted``
    contention, this user must win the repair race against the other
    claimants (win probability proportional to its own MTTR).  The
    ``dedicated`` rule disables contention and serves every claimant,
    which is only physical when the standby has a single user.
    """
    config = config or TrialConfig()
    n = config.trials
    rng = np.random.default_rng(config.rng_seed)

    server_ids = sorted(net.servers)
    col = {sid: i for i, sid in enumerate(server_ids)}
    theta = np.array([net.servers[sid].reliability for sid in server_ids])

    up = rng.random((n, len(server_ids))) < theta  # trials x servers

    # alive[(service, position)] -> boolean vector over trials
    alive = {}
    for (sid, pos), host in sol.placements.items():
        alive[(sid, pos)] = up[:, col[host]].copy()

    for group in sharing_groups(sol, net, reqs):
        backup = sol.backup_by_id(group.backup_id)
        bh_up = up[:, col[backup.host]]
        members = group.members
        claim = np.stack(
            [~up[:, col[sol.placements[(m.service, m.position)]]]
             for m in members], axis=1)
        if config.contention_rule == "dedicated":
            served = claim & bh_up[:, None]
        else:
            # Exponential race: each claimant finishes repair after
            # E/MTTR, smallest wins -> P(win) proportional to MTTR.
            mttrs = np.array([m.mttr for m in members])
            score = rng.exponential(size=(n, len(members))) / mttrs
            score = np.where(claim, score, np.inf)
            winner = np.argmin(score, axis=1)
            is_winner = winner[:, None] == np.arange(len(members))[None, :]
            served = claim & is_winner & bh_up[:, None]
        for k, m in enumerate(members):
            key = (m.service, m.position)
            alive[key] = alive[key] | served[:, k]

    per_vnf = {}
    for key, vec in alive.items():
        p = float(vec.mean())
        per_vnf[key] = (p, _half_width(p, n))

    per_service = {}
    for req in reqs:
        vecs = [alive[(req.id, j)] for j in range(1, len(req.chain) + 1)]
        ok = np.logical_and.reduce(vecs) if vecs else np.ones(n, dtype=bool)
        p = float(ok.mean())
        per_service[req.id] = (p, _half_width(p, n))

    return McResult(per_vnf=per_vnf, per_service=per_service, trials=n)
