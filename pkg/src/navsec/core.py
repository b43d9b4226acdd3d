"""Space, time and clock primitives shared by every other module.

Time is integer nanoseconds since the scenario epoch. Positions live in a
local flat Cartesian frame (x east, y north, z up), in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

C = 299_792_458.0
"""Propagation speed in m/s. No atmospheric model."""

NS_PER_S = 1_000_000_000

SimTime = int


def meters_per_ns() -> float:
    return C / NS_PER_S


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"non-finite coordinate {name}={v!r}")
            # -0.0 and 0.0 compare equal but encode differently
            object.__setattr__(self, name, float(v) + 0.0)

    @classmethod
    def of(cls, v) -> "Position":
        x, y, z = (float(c) for c in v)
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __add__(self, other: "Position") -> "Position":
        return Position(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Position") -> "Position":
        return Position(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, k: float) -> "Position":
        return Position(self.x * k, self.y * k, self.z * k)

    def __iter__(self):
        return iter((self.x, self.y, self.z))


ORIGIN = Position(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Direction:
    """Azimuth clockwise from north (+y) toward east (+x); elevation above the xy plane."""

    azimuth: float
    elevation: float

    def __post_init__(self) -> None:
        az, el = float(self.azimuth), float(self.elevation)
        if not (math.isfinite(az) and math.isfinite(el)):
            raise ValueError("non-finite direction")
        if not 0.0 <= az < 2 * math.pi:
            raise ValueError(f"azimuth {az} outside [0, 2pi)")
        if not -math.pi / 2 <= el <= math.pi / 2:
            raise ValueError(f"elevation {el} outside [-pi/2, pi/2]")
        object.__setattr__(self, "azimuth", az + 0.0)
        object.__setattr__(self, "elevation", el + 0.0)

    @classmethod
    def normalized(cls, azimuth: float, elevation: float) -> "Direction":
        az = math.fmod(azimuth, 2 * math.pi)
        if az < 0:
            az += 2 * math.pi
        if az >= 2 * math.pi:
            az = 0.0
        return cls(az, elevation)

    @classmethod
    def from_vector(cls, v) -> "Direction":
        x, y, z = (float(c) for c in v)
        horiz = math.hypot(x, y)
        if horiz == 0.0 and z == 0.0:
            raise ValueError("zero vector has no direction")
        return cls.normalized(math.atan2(x, y), math.atan2(z, horiz))

    def unit_vector(self) -> np.ndarray:
        ce = math.cos(self.elevation)
        return np.array(
            [math.sin(self.azimuth) * ce, math.cos(self.azimuth) * ce, math.sin(self.elevation)]
        )


@dataclass(frozen=True)
class NodeId:
    """8-byte opaque node identifier."""

    raw: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.raw, (bytes, bytearray)) or len(self.raw) != 8:
            raise ValueError("NodeId must be exactly 8 bytes")
        object.__setattr__(self, "raw", bytes(self.raw))

    @classmethod
    def from_name(cls, name: str) -> "NodeId":
        b = name.encode("ascii")
        if len(b) > 8:
            raise ValueError(f"node name {name!r} longer than 8 bytes")
        return cls(b.ljust(8, b"\x00"))

    @property
    def name(self) -> str:
        stripped = self.raw.rstrip(b"\x00")
        try:
            s = stripped.decode("ascii")
        except UnicodeDecodeError:
            return self.raw.hex()
        return s if s.isprintable() and s else self.raw.hex()

    def __str__(self) -> str:
        return self.name

    def __lt__(self, other: "NodeId") -> bool:
        return self.raw < other.raw


@dataclass(frozen=True)
class ClockModel:
    """Node clock: ``floor((t*(1+drift) + bias) / q) * q``.

    ``drift`` is a dimensionless rate error (1e-6 is one ppm). Arithmetic is
    exact so readings never jitter from float rounding.
    """

    bias: int = 0
    drift: float = 0.0
    quantization: int = 1

    def __post_init__(self) -> None:
        if self.quantization < 1:
            raise ValueError("quantization must be >= 1 ns")
        if self.drift <= -1.0:
            raise ValueError("drift must be > -1")

    @cached_property
    def _rate(self) -> Fraction:
        return 1 + Fraction(repr(float(self.drift)))

    def read(self, true_t: SimTime) -> SimTime:
        local = true_t * self._rate + self.bias
        q = self.quantization
        return (math.floor(local) // q) * q

    def true_time_for(self, local_t: int) -> SimTime:
        """Earliest true time at which the clock reads at least ``local_t``."""
        t = math.ceil((local_t - self.bias) / self._rate)
        while self.read(t) < local_t:
            t += 1
        while t > 0 and self.read(t - 1) >= local_t:
            t -= 1
        return max(t, 0)


def clock_read(model: ClockModel, true_t: SimTime) -> SimTime:
    return model.read(true_t)


def distance(a: Position, b: Position) -> float:
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def tof(a: Position, b: Position) -> SimTime:
    """Light travel time between two points, rounded to the nearest ns."""
    return int(round(distance(a, b) / C * NS_PER_S))


def tof_exact(a: Position, b: Position) -> float:
    return distance(a, b) / C * NS_PER_S


@dataclass(frozen=True)
class PositionFunction:
    """Constant or linear-in-time trajectory: ``p0 + v * (t - epoch)``."""

    p0: Position
    velocity: Position = ORIGIN
    epoch: SimTime = 0

    @property
    def is_constant(self) -> bool:
        return self.velocity == ORIGIN

    def at(self, t: SimTime) -> Position:
        if self.is_constant:
            return self.p0
        dt = (t - self.epoch) / NS_PER_S
        return self.p0 + self.velocity.scaled(dt)


@dataclass(frozen=True)
class AntennaSchedule:
    """Boresight direction over time; azimuth may rotate at ``rate`` rad/s."""

    direction: Direction
    rate: float = 0.0
    epoch: SimTime = 0

    def at(self, t: SimTime) -> Direction:
        if self.rate == 0.0:
            return self.direction
        dt = (t - self.epoch) / NS_PER_S
        return Direction.normalized(self.direction.azimuth + self.rate * dt, self.direction.elevation)
