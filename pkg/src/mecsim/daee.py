"""Delay-aware energy-efficient offloading via drift-plus-penalty.

Each device keeps an actual backlog ``Q`` (bits waiting) and a virtual
backlog ``H`` that grows by ``eps_bits`` in every slot where work is still
queued and shrinks by whatever gets served. Per slot, the device picks the
action minimising

    V * energy + (Q + H) * (arrivals - served)

over {Local, Offload}. Devices don't share resources inside this policy, so
the network-wide problem decomposes into one tiny enumeration per device.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .domain import DeviceState, SimConfig


class EmptyInput(ValueError):
    pass


class Mode(str, enum.Enum):
    LOCAL = "Local"
    OFFLOAD = "Offload"


@dataclass(slots=True)
class QueuePair:
    q_bits: float
    h_bits: float


@dataclass(frozen=True, slots=True)
class DaeeAction:
    mode: Mode
    served_bits: float
    energy_j: float


@dataclass(frozen=True, slots=True)
class ChannelSnapshot:
    distance_m: float
    rate_bits_per_slot: float


def channel_rate(d: float, cfg: SimConfig) -> float:
    """Shannon rate over one slot with power-law path loss beyond ``ref_dist_m``."""
    d_eff = max(d, cfg.ref_dist_m)
    gain = cfg.ref_gain * (d_eff / cfg.ref_dist_m) ** (-cfg.pathloss_exp)
    snr = gain * cfg.tx_power_w / (cfg.noise_w * cfg.bandwidth_hz)
    # log1p keeps the rate strictly positive when snr is below float epsilon
    return cfg.bandwidth_hz * cfg.slot_seconds * math.log1p(snr) / math.log(2.0)


def lyapunov(queues: Sequence[QueuePair]) -> float:
    n = len(queues)
    if n == 0:
        raise EmptyInput("lyapunov needs at least one queue pair")
    return sum(qp.q_bits * qp.q_bits + qp.h_bits * qp.h_bits for qp in queues) / (2 * n)


def update_queues(qp: QueuePair, arrivals_bits: float, served_bits: float, eps_bits: float) -> QueuePair:
    """One-slot update: arrivals join after service."""
    q, h = qp.q_bits, qp.h_bits
    q_next = max(q - served_bits, 0) + arrivals_bits
    h_next = max(h - served_bits + (eps_bits if q > 0 else 0.0), 0.0)
    return QueuePair(q_next, h_next)


def drift_plus_penalty(qp: QueuePair, action: DaeeAction, arrivals_bits: float, V: float) -> float:
    return V * action.energy_j + (qp.q_bits + qp.h_bits) * (arrivals_bits - action.served_bits)


def local_action(dev: DeviceState, cfg: SimConfig) -> DaeeAction:
    capacity = int(dev.cpu_hz * cfg.slot_seconds / cfg.cycles_per_bit)
    served = min(capacity, dev.q_bits)
    cycles = served * cfg.cycles_per_bit
    return DaeeAction(Mode.LOCAL, served, dev.energy_coeff * dev.cpu_hz**2 * cycles)


def offload_action(dev: DeviceState, ch: ChannelSnapshot, cfg: SimConfig) -> DaeeAction:
    served = min(ch.rate_bits_per_slot, dev.q_bits)
    return DaeeAction(Mode.OFFLOAD, served, dev.tx_power_w * cfg.slot_seconds)


def candidate_actions(dev: DeviceState, ch: ChannelSnapshot, cfg: SimConfig) -> list[DaeeAction]:
    # order matters: ties go to the earlier entry
    return [local_action(dev, cfg), offload_action(dev, ch, cfg)]


def argmin_action(qp: QueuePair, actions: Iterable[DaeeAction], arrivals_bits: float, V: float) -> DaeeAction:
    best = None
    best_val = math.inf
    for a in actions:
        val = drift_plus_penalty(qp, a, arrivals_bits, V)
        if val < best_val:
            best, best_val = a, val
    assert best is not None
    return best


def decide_slot(dev: DeviceState, ch: ChannelSnapshot, pending_arrivals_bits: float, cfg: SimConfig) -> DaeeAction:
    """Pick the drift-plus-penalty minimiser for one device in the current slot.

    Service in either mode is capped at the backlog already queued, since
    this slot's arrivals only join the queue after service. Same result as
    ``argmin_action`` over ``candidate_actions``, written out flat because it
    runs once per device per slot.
    """
    q = dev.q_bits
    weight = q + dev.h_bits
    V = cfg.penalty_weight
    local_served = min(int(dev.cpu_hz * cfg.slot_seconds / cfg.cycles_per_bit), q)
    local_energy = dev.energy_coeff * dev.cpu_hz**2 * (local_served * cfg.cycles_per_bit)
    off_served = min(ch.rate_bits_per_slot, q)
    off_energy = dev.tx_power_w * cfg.slot_seconds
    local_val = V * local_energy + weight * (pending_arrivals_bits - local_served)
    off_val = V * off_energy + weight * (pending_arrivals_bits - off_served)
    if off_val < local_val:
        return DaeeAction(Mode.OFFLOAD, off_served, off_energy)
    return DaeeAction(Mode.LOCAL, local_served, local_energy)
