from __future__ import annotations

from dataclasses import dataclass

from ..core import AntennaSchedule, ClockModel, Direction, NodeId, Position, PositionFunction, SimTime
from ..crypto import CryptoBackend, KeyPair

NO_DIRECTION = Direction(0.0, 0.0)


@dataclass
class Station:
    """What a protocol endpoint knows about itself: identity, keys, clock, whereabouts."""

    id: NodeId
    keys: KeyPair
    clock: ClockModel
    trajectory: PositionFunction
    backend: CryptoBackend
    antenna: AntennaSchedule | None = None
    processing_delay: int = 0

    def now(self, true_t: SimTime) -> SimTime:
        return self.clock.read(true_t)

    def position_at(self, local_t: SimTime) -> Position:
        return self.trajectory.at(local_t)

    def direction_at(self, local_t: SimTime) -> Direction:
        return NO_DIRECTION if self.antenna is None else self.antenna.at(local_t)
