"""Speed-of-light propagation between possibly moving nodes, plus link impairments."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from ..core import C, NS_PER_S, Position, PositionFunction

M_PER_NS = C / NS_PER_S
_FIXED_POINT_TOL_NS = 1e-3
_FIXED_POINT_MAX_ITER = 64


def arrival_time(emit_ns: float, emitter: Position, receiver: PositionFunction) -> float:
    """True time (float ns) at which a signal emitted at ``emitter`` reaches a moving receiver.

    Solves |p_recv(t_d) - emitter| = c (t_d - emit) by fixed-point iteration;
    receivers slower than light make it a contraction.
    """
    e = emitter.as_array()
    t = emit_ns + float(np.linalg.norm(_pos(receiver, emit_ns) - e)) / M_PER_NS
    for _ in range(_FIXED_POINT_MAX_ITER):
        nxt = emit_ns + float(np.linalg.norm(_pos(receiver, t) - e)) / M_PER_NS
        if abs(nxt - t) <= _FIXED_POINT_TOL_NS:
            return nxt
        t = nxt
    raise RuntimeError("delivery time did not converge; is the receiver faster than light?")


def arrival_time_linear(emit_ns: float, emitter: Position, receiver: PositionFunction) -> float:
    """Closed-form arrival for a receiver in linear motion (used to check the iteration)."""
    r0 = _pos(receiver, emit_ns) - emitter.as_array()
    v = receiver.velocity.as_array() / NS_PER_S  # m per ns
    a = float(v @ v) - M_PER_NS ** 2
    b = 2.0 * float(r0 @ v)
    c = float(r0 @ r0)
    if c == 0.0:
        return emit_ns
    disc = b * b - 4 * a * c
    tau = (-b - math.sqrt(disc)) / (2 * a)
    return emit_ns + tau


def _pos(fn: PositionFunction, t_ns: float) -> np.ndarray:
    # float-time evaluation; PositionFunction.at is integer-ns
    dt = (t_ns - fn.epoch) / NS_PER_S
    return fn.p0.as_array() + fn.velocity.as_array() * dt


def position_at(fn: PositionFunction, t_ns: float) -> Position:
    return Position.of(_pos(fn, t_ns))


@dataclass
class Channel:
    """Which links exist, when they are jammed, and whether attackers can use the medium at all."""

    blocked: frozenset = frozenset()
    loss: tuple = ()
    transmission_security: bool = False
    rng: random.Random = field(default_factory=lambda: random.Random(0))

    @classmethod
    def from_config(cls, cfg: dict, seed: int) -> "Channel":
        blocked = frozenset(frozenset(p) for p in cfg.get("blocked", []))
        return cls(blocked, tuple(cfg.get("loss", [])), bool(cfg.get("transmission_security", False)),
                   random.Random(f"channel/{seed}"))

    def reachable(self, a: str, b: str) -> bool:
        return frozenset((a, b)) not in self.blocked

    def lost(self, a: str, b: str, t: int) -> bool:
        """Draw loss for one delivery. Draws happen only inside matching windows, in event order."""
        for w in self.loss:
            if w["from"] not in ("*", a) or w["to"] not in ("*", b):
                continue
            if t < w["start_ns"] or (w["end_ns"] is not None and t > w["end_ns"]):
                continue
            p = w["probability"]
            if p >= 1.0 or self.rng.random() < p:
                return True
        return False
