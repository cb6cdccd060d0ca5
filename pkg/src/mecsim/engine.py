"""Discrete-time simulation loop.

Slot order is fixed: mobility, distances/channel, arrivals, decisions,
service, queue and edge-load update, records. Arrivals of slot ``t`` are
visible to the decision of slot ``t`` but can only be served from ``t + 1``.

A task is on time if its last bit leaves the device no later than
``arrival_slot + deadline_slots`` (plus the cloud hop for cloud-routed tasks).
Late tasks are counted once; with ``drop_expired`` they are also removed.

Randomness comes from three independent streams derived from the seed
(mobility, arrivals, task fields), so changing the policy or the channel
never changes the sample path of positions and arrivals.
"""

from __future__ import annotations

import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import daee
from .domain import (
    DeviceState, Policy, Position, ServerState, SimConfig, Task, Urgency,
    make_devices, make_server,
)
from .mobility import MobilityParams, TWO_PI, distance, step_position
from .orchestrator import Tier, place
from .threshold import decide as feasible

ACTIONS = ("Local", "Offload", "Edge", "Cloud")


@dataclass(slots=True)
class SlotRecord:
    slot: int
    device: int
    distance_m: float
    q_bits: int
    h_bits: float
    action: str
    energy_j: float
    deadline_missed: int


@dataclass
class RunSummary:
    policy: str
    n_devices: int
    n_slots: int
    mean_queue_bits: list[float]
    max_queue_bits: list[int]
    total_energy_j: float
    deadline_miss_rate: float
    tier_utilization: dict[str, float]
    final_lyapunov: float
    tasks_arrived: int = 0
    tasks_completed: int = 0
    deadline_misses: int = 0
    arrived_bits: int = 0
    served_bits: int = 0
    queued_bits: int = 0
    dropped_bits: int = 0
    tasks_by_tier: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "n_devices": self.n_devices,
            "n_slots": self.n_slots,
            "mean_queue_bits": self.mean_queue_bits,
            "max_queue_bits": self.max_queue_bits,
            "total_energy_j": self.total_energy_j,
            "deadline_miss_rate": self.deadline_miss_rate,
            "tier_utilization": self.tier_utilization,
            "final_lyapunov": self.final_lyapunov,
            "tasks_arrived": self.tasks_arrived,
            "tasks_completed": self.tasks_completed,
            "deadline_misses": self.deadline_misses,
            "arrived_bits": self.arrived_bits,
            "served_bits": self.served_bits,
            "queued_bits": self.queued_bits,
            "dropped_bits": self.dropped_bits,
            "tasks_by_tier": self.tasks_by_tier,
        }


class _Pending:
    __slots__ = ("task", "remaining", "route", "missed", "dropped")

    def __init__(self, task: Task, route: str | None):
        self.task = task
        self.remaining = task.size_bits
        self.route = route
        self.missed = False
        self.dropped = False


def _streams(seed: int) -> tuple[random.Random, random.Random, random.Random]:
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(random.Random(int(c.generate_state(2, np.uint64)[0])) for c in children)


def _draw_task(rng: random.Random, cfg: SimConfig, task_id: int, slot: int, arrived: bool) -> Task | None:
    # five draws every call, so whether a task arrives doesn't shift the stream
    r = rng.random
    u_mem, u_work, u_size, u_dead, u_urg = r(), r(), r(), r(), r()
    if not arrived:
        return None
    mlo, mhi = cfg.task_mem_mb
    wlo, whi = cfg.task_workload
    slo, shi = cfg.task_size_bits
    dlo, dhi = cfg.task_deadline_slots
    return Task(
        id=task_id,
        mem_mb=mlo + u_mem * (mhi - mlo),
        workload=wlo + u_work * (whi - wlo),
        urgency=Urgency.URGENT if u_urg < cfg.urgent_prob else Urgency.NORMAL,
        deadline_slots=dlo + min(int(u_dead * (dhi - dlo + 1)), dhi - dlo),
        size_bits=slo + min(int(u_size * (shi - slo + 1)), shi - slo),
        arrival_slot=slot,
    )


def _initial_state(cfg: SimConfig, rng: random.Random) -> tuple[ServerState, list[DeviceState]]:
    server = make_server(cfg, Position(cfg.arena_w / 2, cfg.arena_h / 2), TWO_PI * rng.random())
    positions, headings = [], []
    for _ in range(cfg.n_devices):
        positions.append(Position(cfg.arena_w * rng.random(), cfg.arena_h * rng.random()))
        headings.append(TWO_PI * rng.random())
    return server, make_devices(cfg, positions, headings)


def _serve(fifo: deque, capacity: int, route_filter: str | None) -> tuple[int, list[_Pending]]:
    """Drain ``capacity`` bits from the head; stop at a route change when filtering."""
    served = 0
    done = []
    while fifo and served < capacity:
        head = fifo[0]
        if head.dropped:
            fifo.popleft()
            continue
        if route_filter is not None and head.route != route_filter:
            break
        take = min(head.remaining, capacity - served)
        head.remaining -= take
        served += take
        if head.remaining == 0:
            done.append(fifo.popleft())
    return served, done


def run(cfg: SimConfig) -> tuple[list[SlotRecord], RunSummary]:
    policy = Policy(cfg.policy)
    mob_rng, arr_rng, task_rng = _streams(cfg.seed)
    server, devices = _initial_state(cfg, mob_rng)
    n = cfg.n_devices
    tau = cfg.slot_seconds
    dev_params = MobilityParams(cfg.device_velocity_mps, cfg.arena_w, cfg.arena_h, tau, cfg.turn_prob)
    srv_params = MobilityParams(server.velocity_mps, cfg.arena_w, cfg.arena_h, tau, cfg.turn_prob)
    local_cap = cfg.local_bits_per_slot
    kappa_f2_cpb = cfg.energy_coeff * cfg.cpu_hz**2 * cfg.cycles_per_bit
    tx_energy = cfg.tx_power_w * tau
    cloud_lat = cfg.cloud_extra_latency_slots
    edge_cap = cfg.edge_capacity_bits_per_slot
    arrival_prob = cfg.arrival_prob
    eps_bits = cfg.eps_bits
    is_daee = policy is Policy.DAEE
    is_local = policy is Policy.LOCAL
    is_offload = policy is Policy.OFFLOAD
    is_tiered = policy is Policy.TIERED
    is_threshold = policy is Policy.THRESHOLD
    mode_label = {daee.Mode.LOCAL: "Local", daee.Mode.OFFLOAD: "Offload"}
    rate_of = daee.channel_rate
    decide_slot = daee.decide_slot
    update_queues = daee.update_queues
    QueuePair = daee.QueuePair
    ChannelSnapshot = daee.ChannelSnapshot

    fifos = [deque() for _ in range(n)]
    # (due_slot, task id, pending) for tasks not yet flagged late
    due_heaps: list[list] = [[] for _ in range(n)]
    trace: list[SlotRecord] = []
    q_sum = [0] * n
    q_max = [0] * n
    tier_bits = {"local": 0, "edge": 0, "cloud": 0}
    tasks_by_tier = {t.value: 0 for t in Tier}
    energy_total = 0.0
    tasks_arrived = tasks_completed = misses = 0
    arrived_bits = served_total = dropped_bits = 0
    next_task_id = 0

    for t in range(cfg.n_slots):
        server.pos, server.heading = step_position(server.pos, server.heading, srv_params, mob_rng)
        for dev in devices:
            dev.pos, dev.heading = step_position(dev.pos, dev.heading, dev_params, mob_rng)

        edge_in = 0
        for dev in devices:
            i = dev.id
            fifo = fifos[i]
            d = distance(dev.pos, server.pos)
            rate = math.floor(rate_of(d, cfg))

            arrived = arr_rng.random() < arrival_prob
            task = _draw_task(task_rng, cfg, next_task_id, t, arrived)
            new: _Pending | None = None
            a_bits = 0
            if task is not None:
                a_bits = task.size_bits
                next_task_id += 1
                tasks_arrived += 1
                arrived_bits += task.size_bits
                if is_tiered:
                    p = place(task, dev, server, cfg, rate)
                    tasks_by_tier[p.tier.value] += 1
                    route = "Local" if p.tier is Tier.DEVICE else p.tier.value
                elif is_threshold:
                    route = "Offload" if feasible(task, server) else "Local"
                else:
                    route = None
                new = _Pending(task, route)

            q = dev.q_bits
            if is_daee:
                act = decide_slot(dev, ChannelSnapshot(d, rate), a_bits, cfg)
                label = mode_label[act.mode]
                served, done = _serve(fifo, act.served_bits, None)
                energy = act.energy_j
            elif is_local:
                label = "Local"
                served, done = _serve(fifo, local_cap, None)
                energy = kappa_f2_cpb * served
            elif is_offload:
                label = "Offload"
                served, done = _serve(fifo, rate, None)
                energy = tx_energy if q > 0 else 0.0
            else:
                while fifo and fifo[0].dropped:
                    fifo.popleft()
                label = fifo[0].route if fifo else "Local"
                if label == "Local":
                    served, done = _serve(fifo, local_cap, label)
                    energy = kappa_f2_cpb * served
                else:
                    served, done = _serve(fifo, rate, label)
                    energy = tx_energy

            if label == "Local":
                tier_bits["local"] += served
            elif label == "Cloud":
                tier_bits["cloud"] += served
            else:
                tier_bits["edge"] += served
                edge_in += served

            missed_now = 0
            for p in done:
                tasks_completed += 1
                finish = t + (cloud_lat if p.route == "Cloud" else 0)
                if finish > p.task.due_slot and not p.missed:
                    p.missed = True
                    missed_now += 1

            qp = update_queues(QueuePair(q, dev.h_bits), a_bits, served, eps_bits)
            q_next, dev.h_bits = qp.q_bits, qp.h_bits

            # anything still queued past its due slot can no longer finish on time
            heap = due_heaps[i]
            while heap and heap[0][0] <= t:
                p = heapq.heappop(heap)[2]
                if p.remaining == 0 or p.missed:
                    continue
                p.missed = True
                missed_now += 1
                if cfg.drop_expired:
                    dropped_bits += p.remaining
                    q_next -= p.remaining
                    p.remaining = 0
                    p.dropped = True
            if new is not None:
                fifo.append(new)
                heapq.heappush(heap, (new.task.due_slot, new.task.id, new))
            dev.q_bits = q_next

            misses += missed_now
            served_total += served
            energy_total += energy
            q_sum[i] += q_next
            if q_next > q_max[i]:
                q_max[i] = q_next
            trace.append(SlotRecord(t, i, d, q_next, dev.h_bits, label, energy, missed_now))

        server.edge_load_bits = max(server.edge_load_bits - edge_cap, 0.0) + edge_in

    served_any = sum(tier_bits.values())
    summary = RunSummary(
        policy=policy.value,
        n_devices=n,
        n_slots=cfg.n_slots,
        mean_queue_bits=[s / cfg.n_slots if cfg.n_slots else 0.0 for s in q_sum],
        max_queue_bits=q_max,
        total_energy_j=energy_total,
        deadline_miss_rate=misses / tasks_arrived if tasks_arrived else 0.0,
        tier_utilization={k: (v / served_any if served_any else 0.0) for k, v in tier_bits.items()},
        final_lyapunov=daee.lyapunov([daee.QueuePair(d.q_bits, d.h_bits) for d in devices]),
        tasks_arrived=tasks_arrived,
        tasks_completed=tasks_completed,
        deadline_misses=misses,
        arrived_bits=arrived_bits,
        served_bits=served_total,
        queued_bits=sum(d.q_bits for d in devices),
        dropped_bits=dropped_bits,
        tasks_by_tier=tasks_by_tier if policy is Policy.TIERED else {},
    )
    return trace, summary


def compare_policies(cfg: SimConfig, policies: Iterable[Policy | str]) -> dict[str, RunSummary]:
    """Run every policy on the same seed, hence the same mobility and arrivals."""
    out = {}
    for p in policies:
        p = Policy(p)
        _, summary = run(replace(cfg, policy=p))
        out[p.value] = summary
    return out


def backlog_series(trace: Sequence[SlotRecord], n_slots: int) -> list[int]:
    """Total queued bits across devices, per slot."""
    totals = [0] * n_slots
    for r in trace:
        totals[r.slot] += r.q_bits
    return totals

