"""Optimal timing of attacker engagement: when should a defender that watches an
intruder move between honeypots and production systems eject it?"""

__version__ = "0.1.0"

from engagement.model import (
    DerivedQuantities,
    EngagementState,
    InvalidParameters,
    ModelParams,
    SystemType,
    VulnerabilityTable,
    aggregate_cn,
    derive,
    reward,
    transition,
)
from engagement.solver import SolveResult, f_d, k_index, policy, solve_threshold, value

__all__ = [
    "DerivedQuantities",
    "EngagementState",
    "InvalidParameters",
    "ModelParams",
    "SolveResult",
    "SystemType",
    "VulnerabilityTable",
    "aggregate_cn",
    "derive",
    "f_d",
    "k_index",
    "policy",
    "reward",
    "solve_threshold",
    "transition",
    "value",
]
