"""Shared value types and the simulation configuration schema.

Everything here is a plain value. ``SimConfig`` is frozen so a validated
config can be passed around (and hashed/compared) without defensive copies.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import Any, Mapping

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Base class for configuration problems."""


class MissingField(ConfigError):
    def __init__(self, name: str):
        super().__init__(f"missing required field: {name}")
        self.field = name


class OutOfRange(ConfigError):
    def __init__(self, name: str, value: Any, expected: str):
        super().__init__(f"{name}={value!r} out of range (expected {expected})")
        self.field = name
        self.value = value


class InconsistentBounds(ConfigError):
    pass


class UnknownField(ConfigError):
    pass


class Urgency(str, enum.Enum):
    URGENT = "urgent"
    NORMAL = "normal"


class Policy(str, enum.Enum):
    THRESHOLD = "threshold"
    DAEE = "daee"
    TIERED = "tiered"
    # baselines used for comparisons
    LOCAL = "local"
    OFFLOAD = "offload"


@dataclass(slots=True)
class Position:
    x: float
    y: float


@dataclass(slots=True)
class Task:
    id: int
    mem_mb: float
    workload: float
    urgency: Urgency
    deadline_slots: int
    size_bits: int
    arrival_slot: int

    def validate(self) -> None:
        if not self.mem_mb > 0:
            raise ValueError(f"task {self.id}: mem_mb must be > 0")
        if not self.workload > 0:
            raise ValueError(f"task {self.id}: workload must be > 0")
        if self.size_bits <= 0:
            raise ValueError(f"task {self.id}: size_bits must be > 0")
        if self.deadline_slots < 1:
            raise ValueError(f"task {self.id}: deadline_slots must be >= 1")

    @property
    def due_slot(self) -> int:
        """Last slot in which the task may still finish on time."""
        return self.arrival_slot + self.deadline_slots


@dataclass(slots=True)
class DeviceState:
    id: int
    pos: Position
    mem_avail_mb: float
    exec_budget: float
    cpu_hz: float
    energy_coeff: float
    tx_power_w: float
    velocity_mps: float
    q_bits: int = 0
    h_bits: float = 0.0
    heading: float = 0.0


@dataclass(slots=True)
class ServerState:
    pos: Position
    velocity_mps: float
    edge_capacity_bits_per_slot: float
    load_threshold: float
    cloud_extra_latency_slots: int
    # the edge is also an executor for the feasibility rule
    mem_avail_mb: float
    exec_budget: float
    edge_load_bits: float = 0.0
    heading: float = 0.0

    @property
    def load_fraction(self) -> float:
        return self.edge_load_bits / self.edge_capacity_bits_per_slot


@dataclass(frozen=True)
class SimConfig:
    """Validated simulation parameters.

    Defaults are simulator choices, not measured values. Ranges are inclusive
    ``(lo, hi)`` pairs sampled uniformly.
    """

    n_devices: int = 5
    n_slots: int = 100
    slot_seconds: float = 1.0
    seed: int = 0
    policy: Policy = Policy.DAEE

    arena_w: float = 100.0
    arena_h: float = 100.0
    turn_prob: float = 0.1
    device_velocity_mps: float = 1.5
    server_velocity_mps: float = 0.5
    server_mobile: bool = True

    arrival_prob: float = 0.3
    task_mem_mb: tuple[float, float] = (100.0, 1500.0)
    task_workload: tuple[float, float] = (1.0, 20.0)
    task_size_bits: tuple[int, int] = (100_000, 600_000)
    task_deadline_slots: tuple[int, int] = (2, 10)
    urgent_prob: float = 0.3

    device_mem_avail_mb: float = 512.0
    device_exec_budget: float = 10.0
    cpu_hz: float = 5e8
    cycles_per_bit: float = 1000.0
    energy_coeff: float = 1e-27
    tx_power_w: float = 0.2
    task_energy_cap_j: float = 0.1

    edge_capacity_bits_per_slot: float = 2e6
    edge_mem_avail_mb: float = 1024.0
    edge_exec_budget: float = 50.0
    cloud_exec_budget: float = 200.0
    load_threshold: float = 0.8
    cloud_extra_latency_slots: int = 3

    bandwidth_hz: float = 1e6
    noise_w: float = 1e-16
    ref_gain: float = 1e-3
    ref_dist_m: float = 1.0
    pathloss_exp: float = 3.0

    penalty_weight: float = 1e11
    eps_bits: float = 1e4
    drop_expired: bool = False

    @property
    def local_bits_per_slot(self) -> int:
        return int(self.cpu_hz * self.slot_seconds / self.cycles_per_bit)

    @property
    def arena_diagonal(self) -> float:
        return math.hypot(self.arena_w, self.arena_h)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"schema": SCHEMA_VERSION}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, enum.Enum):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


_INT_FIELDS = {"n_devices", "n_slots", "seed", "cloud_extra_latency_slots"}
_BOOL_FIELDS = {"server_mobile", "drop_expired"}
_RANGE_FIELDS = {"task_mem_mb", "task_workload", "task_size_bits", "task_deadline_slots"}
_INT_RANGES = {"task_size_bits", "task_deadline_slots"}
_PROB_FIELDS = {"arrival_prob", "urgent_prob", "turn_prob", "load_threshold"}
_POSITIVE = {
    "slot_seconds", "arena_w", "arena_h", "cpu_hz", "cycles_per_bit", "energy_coeff",
    "tx_power_w", "edge_capacity_bits_per_slot", "edge_exec_budget", "cloud_exec_budget",
    "device_exec_budget", "bandwidth_hz", "noise_w", "ref_gain", "ref_dist_m",
    "pathloss_exp", "task_energy_cap_j",
}
_NON_NEGATIVE = {
    "device_velocity_mps", "server_velocity_mps", "device_mem_avail_mb",
    "edge_mem_avail_mb", "penalty_weight", "eps_bits", "cloud_extra_latency_slots",
}
_REQUIRED = ("n_devices", "n_slots")


def _number(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise OutOfRange(name, value, "a number")
    if not math.isfinite(value):
        raise OutOfRange(name, value, "a finite number")
    return value


def _integer(name: str, value: Any) -> int:
    v = _number(name, value)
    if isinstance(v, float):
        if not v.is_integer():
            raise OutOfRange(name, value, "an integer")
        v = int(v)
    return v


def validate_config(raw: Mapping[str, Any]) -> SimConfig:
    """Build a ``SimConfig`` from parsed JSON, applying defaults.

    Raises ``MissingField``, ``OutOfRange``, ``InconsistentBounds`` or
    ``UnknownField`` (all ``ConfigError``).
    """
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    schema = raw.pop("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise OutOfRange("schema", schema, f"{SCHEMA_VERSION}")
    for name in _REQUIRED:
        if name not in raw:
            raise MissingField(name)

    known = {f.name for f in fields(SimConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise UnknownField(f"unknown config keys: {', '.join(unknown)}")

    kw: dict[str, Any] = {}
    for name, value in raw.items():
        if name == "policy":
            try:
                kw[name] = Policy(value)
            except ValueError:
                choices = "|".join(p.value for p in Policy)
                raise OutOfRange(name, value, choices) from None
        elif name in _BOOL_FIELDS:
            if not isinstance(value, bool):
                raise OutOfRange(name, value, "true or false")
            kw[name] = value
        elif name in _RANGE_FIELDS:
            if not isinstance(value, (list, tuple)) or len(value) != 2:
                raise OutOfRange(name, value, "[lo, hi]")
            conv = _integer if name in _INT_RANGES else _number
            lo, hi = conv(name, value[0]), conv(name, value[1])
            if lo > hi:
                raise InconsistentBounds(f"{name}: lo {lo} > hi {hi}")
            kw[name] = (lo, hi)
        elif name in _INT_FIELDS:
            kw[name] = _integer(name, value)
        else:
            kw[name] = float(_number(name, value))

    cfg = SimConfig(**kw)
    _check_ranges(cfg)
    return cfg


def _check_ranges(cfg: SimConfig) -> None:
    if cfg.n_devices < 1:
        raise OutOfRange("n_devices", cfg.n_devices, ">= 1")
    if cfg.n_slots < 1:
        raise OutOfRange("n_slots", cfg.n_slots, ">= 1")
    if not 0 <= cfg.seed < 2**64:
        raise OutOfRange("seed", cfg.seed, "an unsigned 64-bit integer")
    for name in ("arena_w", "arena_h"):
        if getattr(cfg, name) <= 0:
            raise InconsistentBounds(f"{name} must be > 0, got {getattr(cfg, name)}")
    for name in _POSITIVE:
        if not getattr(cfg, name) > 0:
            raise OutOfRange(name, getattr(cfg, name), "> 0")
    for name in _NON_NEGATIVE:
        if getattr(cfg, name) < 0:
            raise OutOfRange(name, getattr(cfg, name), ">= 0")
    for name in _PROB_FIELDS:
        v = getattr(cfg, name)
        if not 0.0 <= v <= 1.0:
            raise OutOfRange(name, v, "[0, 1]")
    lo, _ = cfg.task_mem_mb
    if lo <= 0:
        raise OutOfRange("task_mem_mb", cfg.task_mem_mb, "lo > 0")
    lo, _ = cfg.task_workload
    if lo <= 0:
        raise OutOfRange("task_workload", cfg.task_workload, "lo > 0")
    lo, _ = cfg.task_size_bits
    if lo <= 0:
        raise OutOfRange("task_size_bits", cfg.task_size_bits, "lo > 0")
    lo, _ = cfg.task_deadline_slots
    if lo < 1:
        raise OutOfRange("task_deadline_slots", cfg.task_deadline_slots, "lo >= 1")
    if cfg.local_bits_per_slot < 0:
        raise OutOfRange("cpu_hz", cfg.cpu_hz, "a non-negative local service rate")


def make_devices(cfg: SimConfig, positions: list[Position], headings: list[float]) -> list[DeviceState]:
    return [
        DeviceState(
            id=i,
            pos=positions[i],
            heading=headings[i],
            mem_avail_mb=cfg.device_mem_avail_mb,
            exec_budget=cfg.device_exec_budget,
            cpu_hz=cfg.cpu_hz,
            energy_coeff=cfg.energy_coeff,
            tx_power_w=cfg.tx_power_w,
            velocity_mps=cfg.device_velocity_mps,
        )
        for i in range(cfg.n_devices)
    ]


def make_server(cfg: SimConfig, pos: Position, heading: float = 0.0) -> ServerState:
    return ServerState(
        pos=pos,
        heading=heading,
        velocity_mps=cfg.server_velocity_mps if cfg.server_mobile else 0.0,
        edge_capacity_bits_per_slot=cfg.edge_capacity_bits_per_slot,
        load_threshold=cfg.load_threshold,
        cloud_extra_latency_slots=cfg.cloud_extra_latency_slots,
        mem_avail_mb=cfg.edge_mem_avail_mb,
        exec_budget=cfg.edge_exec_budget,
    )


__all__ = [
    "SCHEMA_VERSION", "ConfigError", "MissingField", "OutOfRange", "InconsistentBounds",
    "UnknownField", "Urgency", "Policy", "Position", "Task", "DeviceState", "ServerState",
    "SimConfig", "validate_config", "make_devices", "make_server",
]
