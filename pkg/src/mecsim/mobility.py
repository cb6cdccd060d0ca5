"""Bounded random-walk mobility with reflective walls, and device-server distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

from .domain import Position

TWO_PI = 2.0 * math.pi


class UniformStream(Protocol):
    def random(self) -> float: ...


@dataclass(frozen=True, slots=True)
class MobilityParams:
    velocity_mps: float
    arena_w: float
    arena_h: float
    slot_seconds: float = 1.0
    turn_prob: float = 0.0

    def __post_init__(self):
        if self.velocity_mps < 0:
            raise ValueError("velocity_mps must be >= 0")
        if not 0.0 <= self.turn_prob <= 1.0:
            raise ValueError("turn_prob must be in [0, 1]")


def _reflect(v: float, hi: float, heading: float, axis: int) -> tuple[float, float]:
    # axis 0 mirrors the x component (h -> pi - h), axis 1 the y component (h -> -h)
    if v > hi:
        v = hi
    elif v < 0.0:
        v = 0.0
    else:
        return v, heading
    heading = (math.pi - heading) if axis == 0 else -heading
    return v, heading


def step_position(
    pos: Position, heading: float, params: MobilityParams, rng: UniformStream
) -> tuple[Position, float]:
    """Advance one slot.

    Moves ``velocity * slot_seconds`` along ``heading``, clamps to the arena
    and mirrors the heading on any wall that was hit. Afterwards the heading
    is redrawn uniformly on [0, 2pi) with probability ``turn_prob``.

    Exactly two values are drawn from ``rng`` per call, whether or not a
    turn happens, so the stream stays aligned across configurations.
    """
    step = params.velocity_mps * params.slot_seconds
    x = pos.x + step * math.cos(heading)
    y = pos.y + step * math.sin(heading)
    x, heading = _reflect(x, params.arena_w, heading, 0)
    y, heading = _reflect(y, params.arena_h, heading, 1)

    u_turn = rng.random()
    u_heading = rng.random()
    if u_turn < params.turn_prob:
        heading = TWO_PI * u_heading
    return Position(x, y), heading % TWO_PI


def distance(device_pos: Position, server_pos: Position) -> float:
    return math.hypot(device_pos.x - server_pos.x, device_pos.y - server_pos.y)
