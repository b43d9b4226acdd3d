from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from ..core import SimTime


class EventKind(str, Enum):
    TRANSMIT = "transmit"
    DELIVER = "deliver"
    TIMER = "timer"


@dataclass(frozen=True)
class SimEvent:
    """One scheduled occurrence in true time.

    ``provenance`` names the honest origin first, then every attacker that
    relayed or re-emitted the message. It only ever grows.
    """

    fire_time: SimTime
    seq: int
    kind: EventKind
    node: str
    payload: Any = None
    provenance: tuple[str, ...] = ()

    def extended(self, who: str) -> tuple[str, ...]:
        return self.provenance + (who,)


@dataclass
class EventQueue:
    """Min-heap on (fire_time, insertion sequence): equal times fire in the order scheduled."""

    _heap: list = field(default_factory=list)
    _seq: itertools.count = field(default_factory=itertools.count)

    def push(self, fire_time: SimTime, kind: EventKind, node: str, payload: Any = None,
             provenance: tuple[str, ...] = ()) -> SimEvent:
        if fire_time < 0:
            raise ValueError("events cannot fire before time zero")
        ev = SimEvent(int(fire_time), next(self._seq), kind, node, payload, tuple(provenance))
        heapq.heappush(self._heap, (ev.fire_time, ev.seq, ev))
        return ev

    def pop(self) -> SimEvent:
        return heapq.heappop(self._heap)[2]

    def peek_time(self) -> SimTime | None:
        return self._heap[0][0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)
