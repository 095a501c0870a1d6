"""Simulator and verifier for BGP policy dynamics with conventional,
filter-first and neighbor-specific route selection."""

from .engine import Outcome, OutcomeKind, ProtocolState, Schedule, Simulator
from .model import EMPTY, Instance, Mode, RankingFunction, Relationship, extend, validate

__version__ = "0.1.0"

__all__ = [
    "EMPTY",
    "Instance",
    "Mode",
    "Outcome",
    "OutcomeKind",
    "ProtocolState",
    "RankingFunction",
    "Relationship",
    "Schedule",
    "Simulator",
    "extend",
    "validate",
]
