"""Three-tier placement: device -> edge -> cloud.

Step one runs on the device and decides whether a fresh task stays local.
Step two runs on the edge for forwarded tasks: urgent work is always kept,
normal work is pushed to the cloud once the edge is past its load threshold.
Both steps are fixed rules over memory, urgency, energy and load.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .domain import DeviceState, ServerState, SimConfig, Task, Urgency
from .threshold import decide as feasible


class Tier(str, enum.Enum):
    DEVICE = "Device"
    EDGE = "Edge"
    CLOUD = "Cloud"


class IotChoice(str, enum.Enum):
    EXECUTE_LOCAL = "ExecuteLocal"
    SEND_TO_EDGE = "SendToEdge"


class EdgeChoice(str, enum.Enum):
    EXECUTE_AT_EDGE = "ExecuteAtEdge"
    FORWARD_TO_CLOUD = "ForwardToCloud"


@dataclass(frozen=True, slots=True)
class Placement:
    tier: Tier
    admitted_slot: int
    completion_slot: float = math.inf


@dataclass(frozen=True, slots=True)
class IotScore:
    mem_ok: bool
    urgency: Urgency
    energy_ok: bool


def local_task_energy(task: Task, dev: DeviceState, cfg: SimConfig) -> float:
    return dev.energy_coeff * dev.cpu_hz**2 * task.size_bits * cfg.cycles_per_bit


def iot_score(task: Task, dev: DeviceState, cfg: SimConfig) -> IotScore:
    return IotScore(
        mem_ok=task.mem_mb <= dev.mem_avail_mb,
        urgency=task.urgency,
        energy_ok=local_task_energy(task, dev, cfg) <= cfg.task_energy_cap_j,
    )


def complete(
    placement: Placement,
    task: Task,
    service_rate: float,
    tx_bits_per_slot: float = math.inf,
    cloud_extra_latency_slots: int = 0,
) -> float:
    """Estimated completion slot for ``task`` on ``placement.tier``.

    ``service_rate`` is the tier's execution budget per slot (workload units);
    ``tx_bits_per_slot`` is only used for remote tiers. A zero transmit rate
    makes a remote task unfinishable and returns ``inf``.
    """
    slots = math.ceil(task.workload / service_rate)
    if placement.tier is not Tier.DEVICE:
        if tx_bits_per_slot <= 0:
            return math.inf
        slots += math.ceil(task.size_bits / tx_bits_per_slot)
    if placement.tier is Tier.CLOUD:
        slots += cloud_extra_latency_slots
    return placement.admitted_slot + slots


def local_completion(task: Task, dev: DeviceState, cfg: SimConfig) -> float:
    # wait for the bits already queued, then run the task itself
    local_bits = int(dev.cpu_hz * cfg.slot_seconds / cfg.cycles_per_bit)
    if local_bits <= 0:
        return math.inf
    wait = math.ceil(dev.q_bits / local_bits)
    return complete(Placement(Tier.DEVICE, task.arrival_slot + wait), task, dev.exec_budget)


def iot_decide(task: Task, dev: DeviceState, cfg: SimConfig) -> IotChoice:
    score = iot_score(task, dev, cfg)
    if not (feasible(task, dev) and score.energy_ok):
        return IotChoice.SEND_TO_EDGE
    if score.urgency is Urgency.URGENT and local_completion(task, dev, cfg) > task.due_slot:
        return IotChoice.SEND_TO_EDGE
    return IotChoice.EXECUTE_LOCAL


def edge_decide(task: Task, srv: ServerState) -> EdgeChoice:
    if task.urgency is Urgency.URGENT:
        return EdgeChoice.EXECUTE_AT_EDGE
    if srv.load_fraction < srv.load_threshold:
        return EdgeChoice.EXECUTE_AT_EDGE
    return EdgeChoice.FORWARD_TO_CLOUD


def place(task: Task, dev: DeviceState, srv: ServerState, cfg: SimConfig, tx_bits_per_slot: float) -> Placement:
    """Run both steps and attach a completion estimate."""
    if iot_decide(task, dev, cfg) is IotChoice.EXECUTE_LOCAL:
        return Placement(Tier.DEVICE, task.arrival_slot, local_completion(task, dev, cfg))
    if edge_decide(task, srv) is EdgeChoice.EXECUTE_AT_EDGE:
        p = Placement(Tier.EDGE, task.arrival_slot)
        return Placement(p.tier, p.admitted_slot, complete(p, task, srv.exec_budget, tx_bits_per_slot))
    p = Placement(Tier.CLOUD, task.arrival_slot)
    done = complete(p, task, cfg.cloud_exec_budget, tx_bits_per_slot, srv.cloud_extra_latency_slots)
    return Placement(p.tier, p.admitted_slot, done)
