"""Reliability-aware service chain placement with shared backup protection."""

from .model import (BackupVnf, Link, ScenarioError, Server, ServiceRequest,
                    Solution, SubstrateNetwork, VnfSpec, load_scenario,
                    load_solution, save_scenario, save_solution)

__all__ = [
    "BackupVnf", "Link", "ScenarioError", "Server", "ServiceRequest",
    "Solution", "SubstrateNetwork", "VnfSpec", "load_scenario",
    "load_solution", "save_scenario", "save_solution",
]

__version__ = "0.1.0"
