"""Binary offloading feasibility rule.

A job is feasible on an executor when it fits in the executor's free
memory and its workload fits the executor's per-slot execution budget::

    O = 1  if  mem_mb <= mem_avail_mb  and  workload <= exec_budget
    O = 0  otherwise

Both comparisons are non-strict. The executor can be a device or the edge
server; anything exposing ``mem_avail_mb`` and ``exec_budget`` works.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol

from .domain import Task


class Executor(Protocol):
    mem_avail_mb: float
    exec_budget: float


class Reason(str, enum.Enum):
    MEM_INFEASIBLE = "mem_infeasible"
    BUDGET_INFEASIBLE = "budget_infeasible"
    FEASIBLE = "feasible"


@dataclass(frozen=True, slots=True)
class ThresholdDecision:
    o: int
    reason: Reason

    def __bool__(self) -> bool:
        return self.o == 1


def decide(task: Task, target: Executor) -> ThresholdDecision:
    # memory is checked first, so a task failing both reports MEM_INFEASIBLE
    if not task.mem_mb <= target.mem_avail_mb:
        return ThresholdDecision(0, Reason.MEM_INFEASIBLE)
    if not task.workload <= target.exec_budget:
        return ThresholdDecision(0, Reason.BUDGET_INFEASIBLE)
    return ThresholdDecision(1, Reason.FEASIBLE)
