"""Slotted simulator for offloading decisions in a mobile-edge-computing cell."""

from .domain import Policy, SimConfig, validate_config
from .engine import RunSummary, SlotRecord, compare_policies, run

__all__ = ["Policy", "SimConfig", "validate_config", "run", "compare_policies", "RunSummary", "SlotRecord"]
__version__ = "0.1.0"
