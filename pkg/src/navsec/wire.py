"""Byte-exact wire encodings for every protocol packet.

Every message is ``type (1B) | version (1B) | body``. Integers are
big-endian and fixed width, floats are IEEE-754 f64 big-endian, and
variable fields carry a 2-byte length prefix. Decoding is strict: bad tags,
truncation, trailing bytes and non-canonical encodings (such as ``-0.0``)
are all rejected, so a decoded message re-encodes to the exact input.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import ClassVar

from .core import Direction, NodeId, Position
from .crypto import Ciphertext, Signature

VERSION = 1
MAX_FIELD = 0xFFFF

BEACON = 0x01
COMMIT = 0x02
REVEAL = 0x03
INTERROGATE = 0x04
RESPOND = 0x05
AUTH = 0x06
RANGEREPORT = 0x07
CERT = 0x08
AUTHREQ = 0x09
SYM_ENVELOPE = 0x10
PK_ENVELOPE = 0x11

_U64_MAX = 2**64 - 1


class MalformedMessage(ValueError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def u8(self, v: int) -> "Writer":
        self._parts.append(struct.pack(">B", v))
        return self

    def u16(self, v: int) -> "Writer":
        self._parts.append(struct.pack(">H", v))
        return self

    def u64(self, v: int) -> "Writer":
        if not 0 <= v <= _U64_MAX:
            raise ValueError(f"u64 out of range: {v}")
        self._parts.append(struct.pack(">Q", v))
        return self

    def f64(self, v: float) -> "Writer":
        self._parts.append(struct.pack(">d", v))
        return self

    def fixed(self, b: bytes, n: int) -> "Writer":
        if len(b) != n:
            raise ValueError(f"expected {n} bytes, got {len(b)}")
        self._parts.append(bytes(b))
        return self

    def lp(self, b: bytes) -> "Writer":
        if len(b) > MAX_FIELD:
            raise ValueError("field too long for 2-byte length prefix")
        self.u16(len(b))
        self._parts.append(bytes(b))
        return self

    def position(self, p: Position) -> "Writer":
        return self.f64(p.x).f64(p.y).f64(p.z)

    def direction(self, d: Direction) -> "Writer":
        return self.f64(d.azimuth).f64(d.elevation)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, buf: bytes, offset: int = 0):
        self.buf = memoryview(buf)
        self.pos = offset

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise MalformedMessage("truncated")
        out = bytes(self.buf[self.pos:self.pos + n])
        self.pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self._take(2))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self._take(8))[0]

    def f64(self) -> float:
        v = struct.unpack(">d", self._take(8))[0]
        if not math.isfinite(v):
            raise MalformedMessage("non-finite float")
        return v

    def fixed(self, n: int) -> bytes:
        return self._take(n)

    def lp(self) -> bytes:
        return self._take(self.u16())

    def node_id(self) -> NodeId:
        return NodeId(self._take(8))

    def position(self) -> Position:
        return Position(self.f64(), self.f64(), self.f64())

    def direction(self) -> Direction:
        az, el = self.f64(), self.f64()
        try:
            return Direction(az, el)
        except ValueError as e:
            raise MalformedMessage(str(e)) from None

    def signature(self) -> Signature:
        raw = self.lp()
        if not raw:
            raise MalformedMessage("empty signature")
        return Signature.from_bytes(raw)

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise MalformedMessage("trailing bytes")


_REGISTRY: dict[int, type] = {}


def register(cls):
    _REGISTRY[cls.TYPE] = cls
    return cls


class Message:
    TYPE: ClassVar[int]

    def write_body(self, w: Writer) -> None:
        raise NotImplementedError

    @classmethod
    def read_body(cls, r: Reader):
        raise NotImplementedError

    def header(self) -> bytes:
        return bytes([self.TYPE, VERSION])

    def encode(self) -> bytes:
        w = Writer()
        self.write_body(w)
        return self.header() + w.getvalue()


class SignedMessage(Message):
    """Messages whose trailing field is a signature over everything before it."""

    def write_signed_fields(self, w: Writer) -> None:
        raise NotImplementedError

    def signed_bytes(self) -> bytes:
        w = Writer()
        self.write_signed_fields(w)
        return self.header() + w.getvalue()

    def write_body(self, w: Writer) -> None:
        self.write_signed_fields(w)
        w.lp(self.sig.to_bytes())


@register
@dataclass(frozen=True)
class Beacon(SignedMessage):
    TYPE: ClassVar[int] = BEACON
    p: Position
    d: Direction
    t: int
    i: NodeId
    sig: Signature

    def write_signed_fields(self, w):
        w.position(self.p).direction(self.d).u64(self.t).fixed(self.i.raw, 8)

    @classmethod
    def read_body(cls, r):
        return cls(r.position(), r.direction(), r.u64(), r.node_id(), r.signature())


@register
@dataclass(frozen=True)
class Commit(SignedMessage):
    TYPE: ClassVar[int] = COMMIT
    digest: bytes
    t1: int
    i: NodeId
    sig: Signature

    def write_signed_fields(self, w):
        w.fixed(self.digest, 32).u64(self.t1).fixed(self.i.raw, 8)

    @classmethod
    def read_body(cls, r):
        return cls(r.fixed(32), r.u64(), r.node_id(), r.signature())


@register
@dataclass(frozen=True)
class Reveal(Message):
    TYPE: ClassVar[int] = REVEAL
    r: bytes
    t2: int
    i: NodeId

    def write_body(self, w):
        w.fixed(self.r, 32).u64(self.t2).fixed(self.i.raw, 8)

    @classmethod
    def read_body(cls, r):
        return cls(r.fixed(32), r.u64(), r.node_id())


@register
@dataclass(frozen=True)
class Interrogate(Message):
    TYPE: ClassVar[int] = INTERROGATE
    r_c: bytes
    t: int

    def write_body(self, w):
        w.fixed(self.r_c, 32).u64(self.t)

    @classmethod
    def read_body(cls, r):
        return cls(r.fixed(32), r.u64())


@register
@dataclass(frozen=True)
class Respond(Message):
    TYPE: ClassVar[int] = RESPOND
    r_c: bytes
    r_n: bytes

    def write_body(self, w):
        w.fixed(self.r_c, 32).fixed(self.r_n, 32)

    @classmethod
    def read_body(cls, r):
        return cls(r.fixed(32), r.fixed(32))


@register
@dataclass(frozen=True)
class Auth(SignedMessage):
    TYPE: ClassVar[int] = AUTH
    p: Position
    d: Direction
    t: int
    i: NodeId
    r_c: bytes
    r_n: bytes
    sig: Signature

    def write_signed_fields(self, w):
        w.position(self.p).direction(self.d).u64(self.t).fixed(self.i.raw, 8)
        w.fixed(self.r_c, 32).fixed(self.r_n, 32)

    @classmethod
    def read_body(cls, r):
        return cls(r.position(), r.direction(), r.u64(), r.node_id(), r.fixed(32), r.fixed(32),
                   r.signature())


@register
@dataclass(frozen=True)
class RangeReport(SignedMessage):
    TYPE: ClassVar[int] = RANGEREPORT
    range_m: float
    t: int
    i: NodeId
    sig: Signature

    def __post_init__(self):
        if not math.isfinite(self.range_m):
            raise ValueError("range must be finite")

    def write_signed_fields(self, w):
        w.f64(self.range_m).u64(self.t).fixed(self.i.raw, 8)

    @classmethod
    def read_body(cls, r):
        return cls(r.f64(), r.u64(), r.node_id(), r.signature())


@register
@dataclass(frozen=True)
class AuthRequest(Message):
    """Asks a Protocol 5 navaid to send its authentication for session ``r_c`` to node ``i``."""

    TYPE: ClassVar[int] = AUTHREQ
    r_c: bytes
    i: NodeId

    def write_body(self, w):
        w.fixed(self.r_c, 32).fixed(self.i.raw, 8)

    @classmethod
    def read_body(cls, r):
        return cls(r.fixed(32), r.node_id())


@register
@dataclass(frozen=True)
class SymEnvelope(Message):
    """Symmetric envelope; the header through ``key_id`` is authenticated as associated data."""

    TYPE: ClassVar[int] = SYM_ENVELOPE
    alg: int
    key_id: bytes
    nonce: bytes
    ciphertext: bytes

    def aad(self) -> bytes:
        return self.header() + bytes([self.alg]) + self.key_id

    def as_ciphertext(self) -> Ciphertext:
        return Ciphertext(self.alg, self.nonce, self.ciphertext)

    def write_body(self, w):
        w.u8(self.alg).fixed(self.key_id, 8).fixed(self.nonce, 12).lp(self.ciphertext)

    @classmethod
    def read_body(cls, r):
        return cls(r.u8(), r.fixed(8), r.fixed(12), r.lp())


@register
@dataclass(frozen=True)
class PkEnvelope(Message):
    """Public-key envelope addressed to the key with id ``recipient``."""

    TYPE: ClassVar[int] = PK_ENVELOPE
    alg: int
    recipient: bytes
    nonce: bytes
    ciphertext: bytes

    def as_ciphertext(self) -> Ciphertext:
        return Ciphertext(self.alg, self.nonce, self.ciphertext)

    def write_body(self, w):
        w.u8(self.alg).fixed(self.recipient, 8).fixed(self.nonce, 12).lp(self.ciphertext)

    @classmethod
    def read_body(cls, r):
        return cls(r.u8(), r.fixed(8), r.fixed(12), r.lp())


def encode(msg: Message) -> bytes:
    return msg.encode()


def decode(buf: bytes) -> Message:
    if not buf:
        raise MalformedMessage("empty buffer")
    if len(buf) < 2:
        raise MalformedMessage("truncated header")
    msg_type, version = buf[0], buf[1]
    if msg_type == CERT and CERT not in _REGISTRY:
        from . import certs  # noqa: F401  registers the CERT decoder
    cls = _REGISTRY.get(msg_type)
    if cls is None:
        raise MalformedMessage(f"unknown message type 0x{msg_type:02x}")
    if version != VERSION:
        raise MalformedMessage(f"unsupported version {version}")
    r = Reader(buf, 2)
    try:
        msg = cls.read_body(r)
    except MalformedMessage:
        raise
    except ValueError as e:
        raise MalformedMessage(str(e)) from None
    r.done()
    if msg.encode() != bytes(buf):
        raise MalformedMessage("non-canonical encoding")
    return msg


def decode_as(buf: bytes, cls: type) -> Message:
    msg = decode(buf)
    if not isinstance(msg, cls):
        raise MalformedMessage(f"expected {cls.__name__}, got {type(msg).__name__}")
    return msg
