"""Modular certificates: small signed bundles of assertions about one node.

A certificate carries a handful of assertions, a validity window, the
subject's NodeId, the certifier's public key and a signature over the hash
of everything before it. Trust is evaluated by walking a root-first chain of
key delegations under a ``TrustPolicy``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import ClassVar, Iterable, Mapping, Sequence

from . import crypto
from .core import AntennaSchedule, Direction, NodeId, Position, PositionFunction, SimTime
from .crypto import CryptoBackend, PrivateKey, PublicKey, Signature
from .wire import CERT, MalformedMessage, Reader, SignedMessage, Writer, register

MAX_CHAIN_DEPTH = 8


class AssertionKind(IntEnum):
    POSITION_FUNCTION = 0x01
    ANTENNA_DIRECTION = 0x02
    TAIL_NUMBER = 0x03
    PLATFORM_TYPE = 0x04
    PUBLIC_KEY_DELEGATION = 0x05
    CRYPTO_SECURITY_TYPE = 0x06
    PHYSICAL_SECURITY_LEVEL = 0x07
    OWNER = 0x08
    OWNER_TYPE = 0x09
    RECEIVER_SENSITIVITY = 0x0A
    TRANSMIT_POWER = 0x0B
    # extension range (>= 0x40): not part of the core vocabulary
    PROCESSING_DELAY = 0x40


class CryptoSecurityType(IntEnum):
    UNVERIFIED = 0
    REMOTELY_SECURE = 1
    TAMPER_RESISTANT = 2


class PhysicalSecurityLevel(IntEnum):
    UNSECURED = 0
    ALARMED = 1
    SEALED = 2
    SUPERVISED = 3


class PlatformType(IntEnum):
    SURFACE = 0
    AIRBORNE = 1
    SPACE = 2


class OwnerType(IntEnum):
    INDIVIDUAL = 0
    AIRLINE = 1
    GOVERNMENT = 2
    OTHER = 3


_LEVEL_KINDS = {
    AssertionKind.CRYPTO_SECURITY_TYPE,
    AssertionKind.PHYSICAL_SECURITY_LEVEL,
    AssertionKind.PLATFORM_TYPE,
    AssertionKind.OWNER_TYPE,
}


class CertError(Exception):
    pass


class Expired(CertError):
    pass


class BadSignature(CertError):
    pass


class Revoked(CertError):
    pass


class NoPositionAssertion(CertError):
    pass


class NoTrustPath(CertError):
    def __init__(self, link: int, reason: str):
        super().__init__(f"link {link}: {reason}")
        self.link = link
        self.reason = reason


@dataclass(frozen=True)
class Assertion:
    kind: int
    value: bytes

    @property
    def kind_name(self) -> str:
        try:
            return AssertionKind(self.kind).name
        except ValueError:
            return f"UNKNOWN_0x{self.kind:02x}"


# -- assertion constructors ---------------------------------------------------

def position_assertion(fn: PositionFunction | Position) -> Assertion:
    if isinstance(fn, Position):
        fn = PositionFunction(fn)
    w = Writer()
    if fn.is_constant:
        w.u8(0).position(fn.p0)
    else:
        w.u8(1).position(fn.p0).position(fn.velocity).u64(fn.epoch)
    return Assertion(AssertionKind.POSITION_FUNCTION, w.getvalue())


def antenna_assertion(schedule: AntennaSchedule | Direction) -> Assertion:
    if isinstance(schedule, Direction):
        schedule = AntennaSchedule(schedule)
    w = Writer().direction(schedule.direction).f64(schedule.rate).u64(schedule.epoch)
    return Assertion(AssertionKind.ANTENNA_DIRECTION, w.getvalue())


def key_delegation(pub: PublicKey) -> Assertion:
    return Assertion(AssertionKind.PUBLIC_KEY_DELEGATION, pub.to_bytes())


def level_assertion(kind: AssertionKind, level: int) -> Assertion:
    if kind not in _LEVEL_KINDS:
        raise ValueError(f"{kind!r} is not a level-valued assertion")
    return Assertion(kind, bytes([int(level)]))


def text_assertion(kind: AssertionKind, text: str) -> Assertion:
    if kind not in (AssertionKind.TAIL_NUMBER, AssertionKind.OWNER):
        raise ValueError(f"{kind!r} is not a text assertion")
    return Assertion(kind, text.encode("utf-8"))


def processing_delay_assertion(delay_ns: int) -> Assertion:
    return Assertion(AssertionKind.PROCESSING_DELAY, struct.pack(">Q", delay_ns))


def decode_position_function(value: bytes) -> PositionFunction:
    r = Reader(value)
    form = r.u8()
    if form == 0:
        fn = PositionFunction(r.position())
    elif form == 1:
        fn = PositionFunction(r.position(), r.position(), r.u64())
    else:
        raise MalformedMessage(f"unknown position function form {form}")
    r.done()
    return fn


def decode_antenna_schedule(value: bytes) -> AntennaSchedule:
    r = Reader(value)
    sched = AntennaSchedule(r.direction(), r.f64(), r.u64())
    r.done()
    return sched


def decode_assertion(a: Assertion):
    """Typed view of an assertion value; opaque kinds come back as bytes."""
    k = a.kind
    if k == AssertionKind.POSITION_FUNCTION:
        return decode_position_function(a.value)
    if k == AssertionKind.ANTENNA_DIRECTION:
        return decode_antenna_schedule(a.value)
    if k == AssertionKind.PUBLIC_KEY_DELEGATION:
        return PublicKey.from_bytes(a.value)
    if k in _LEVEL_KINDS:
        if len(a.value) != 1:
            raise MalformedMessage("level assertion must be one byte")
        return a.value[0]
    if k in (AssertionKind.TAIL_NUMBER, AssertionKind.OWNER):
        return a.value.decode("utf-8")
    if k == AssertionKind.PROCESSING_DELAY:
        if len(a.value) != 8:
            raise MalformedMessage("processing delay must be u64")
        return struct.unpack(">Q", a.value)[0]
    return a.value


# -- certificate ------------------------------------------------------------

@register
@dataclass(frozen=True)
class Certificate(SignedMessage):
    TYPE: ClassVar[int] = CERT
    subject: NodeId
    valid_from: SimTime
    valid_to: SimTime
    certifier_key: PublicKey
    assertions: tuple[Assertion, ...]
    sig: Signature

    def write_signed_fields(self, w: Writer) -> None:
        w.fixed(self.subject.raw, 8).u64(self.valid_from).u64(self.valid_to)
        w.lp(self.certifier_key.to_bytes())
        w.u16(len(self.assertions))
        for a in self.assertions:
            w.u8(a.kind).lp(a.value)

    @classmethod
    def read_body(cls, r: Reader) -> "Certificate":
        subject = r.node_id()
        vf, vt = r.u64(), r.u64()
        key = PublicKey.from_bytes(r.lp())
        n = r.u16()
        assertions = tuple(Assertion(r.u8(), r.lp()) for _ in range(n))
        return cls(subject, vf, vt, key, assertions, r.signature())

    @property
    def digest(self) -> bytes:
        return crypto.digest(self.encode())

    def find(self, kind: int) -> Assertion | None:
        for a in self.assertions:
            if a.kind == kind:
                return a
        return None

    def delegated_key(self) -> PublicKey | None:
        a = self.find(AssertionKind.PUBLIC_KEY_DELEGATION)
        return None if a is None else PublicKey.from_bytes(a.value)


def _backend(backend: CryptoBackend | None, tag: int) -> CryptoBackend:
    return backend if backend is not None else crypto.backend_for(tag)


def cert_issue(
    certifier: PrivateKey,
    subject: NodeId,
    assertions: Iterable[Assertion],
    window: tuple[SimTime, SimTime],
    backend: CryptoBackend | None = None,
) -> Certificate:
    valid_from, valid_to = window
    if valid_from > valid_to:
        raise ValueError("validity window ends before it starts")
    be = _backend(backend, certifier.alg)
    unsigned = Certificate(subject, valid_from, valid_to, be.public_key(certifier),
                           tuple(assertions), Signature(certifier.alg, b""))
    sig = be.sign(certifier, crypto.digest(unsigned.signed_bytes()))
    return replace(unsigned, sig=sig)


def cert_verify(
    c: Certificate,
    now: SimTime,
    revoked: Iterable[bytes] = (),
    backend: CryptoBackend | None = None,
) -> bool:
    """Return True or raise ``Revoked``, ``BadSignature`` or ``Expired``."""
    if c.digest in frozenset(revoked):
        raise Revoked(c.digest.hex())
    be = _backend(backend, c.certifier_key.alg)
    if not be.verify(c.certifier_key, crypto.digest(c.signed_bytes()), c.sig):
        raise BadSignature(f"certificate for {c.subject}")
    if not c.valid_from <= now <= c.valid_to:
        raise Expired(f"now={now} outside [{c.valid_from}, {c.valid_to}]")
    return True


@dataclass(frozen=True)
class TrustPolicy:
    roots: frozenset = frozenset()
    minimums: tuple[tuple[int, int], ...] = ()
    revoked: frozenset = frozenset()

    @classmethod
    def create(cls, roots: Iterable[PublicKey], minimums: Mapping[int, int] | None = None,
               revoked: Iterable[bytes] = ()) -> "TrustPolicy":
        mins = tuple(sorted((int(k), int(v)) for k, v in (minimums or {}).items()))
        return cls(frozenset(roots), mins, frozenset(revoked))

    def with_revoked(self, digest: bytes) -> "TrustPolicy":
        return replace(self, revoked=self.revoked | {digest})

    def without_revoked(self, digest: bytes) -> "TrustPolicy":
        return replace(self, revoked=self.revoked - {digest})

    def with_minimum(self, kind: int, level: int) -> "TrustPolicy":
        mins = dict(self.minimums)
        mins[int(kind)] = int(level)
        return replace(self, minimums=tuple(sorted(mins.items())))


def _meets_minimums(c: Certificate, policy: TrustPolicy) -> str | None:
    for kind, level in policy.minimums:
        a = c.find(kind)
        if a is None:
            return f"missing {Assertion(kind, b'').kind_name}"
        if len(a.value) != 1 or a.value[0] < level:
            return f"{a.kind_name} below minimum {level}"
    return None


def resolve_key(
    id: NodeId,
    chain: Sequence[Certificate],
    policy: TrustPolicy,
    now: SimTime,
    backend: CryptoBackend | None = None,
) -> PublicKey:
    """Walk a root-first delegation chain and return the key it binds to ``id``."""
    if not chain:
        raise NoTrustPath(0, "empty chain")
    if len(chain) > MAX_CHAIN_DEPTH:
        raise NoTrustPath(MAX_CHAIN_DEPTH, f"chain longer than {MAX_CHAIN_DEPTH}")
    expected: PublicKey | None = None
    for k, c in enumerate(chain):
        if k == 0:
            if c.certifier_key not in policy.roots:
                raise NoTrustPath(0, "certifier is not a trusted root")
        elif c.certifier_key != expected:
            raise NoTrustPath(k, "certifier key does not match previous delegation")
        try:
            cert_verify(c, now, policy.revoked, backend)
        except CertError as e:
            raise NoTrustPath(k, f"{type(e).__name__}: {e}") from None
        problem = _meets_minimums(c, policy)
        if problem:
            raise NoTrustPath(k, problem)
        expected = c.delegated_key()
        if expected is None:
            raise NoTrustPath(k, "no public key delegation")
    if chain[-1].subject != id:
        raise NoTrustPath(len(chain) - 1, f"leaf subject {chain[-1].subject} is not {id}")
    return expected


def navaid_position_at(c: Certificate, t: SimTime) -> Position:
    a = c.find(AssertionKind.POSITION_FUNCTION)
    if a is None:
        raise NoPositionAssertion(str(c.subject))
    return decode_position_function(a.value).at(t)


def antenna_direction_at(c: Certificate, t: SimTime) -> Direction | None:
    a = c.find(AssertionKind.ANTENNA_DIRECTION)
    return None if a is None else decode_antenna_schedule(a.value).at(t)


def processing_delay_of(c: Certificate) -> int:
    a = c.find(AssertionKind.PROCESSING_DELAY)
    if a is None:
        raise CertError(f"no processing delay certified for {c.subject}")
    return decode_assertion(a)


@dataclass
class KeyDirectory:
    """Per-node view of who holds which key, backed by certificate chains."""

    policy: TrustPolicy
    chains: dict = field(default_factory=dict)
    backend: CryptoBackend | None = None

    def add(self, chain: Sequence[Certificate]) -> None:
        self.chains[chain[-1].subject] = list(chain)

    def lookup(self, id: NodeId, now: SimTime) -> PublicKey:
        chain = self.chains.get(id)
        if chain is None:
            raise NoTrustPath(0, f"no certificates for {id}")
        return resolve_key(id, chain, self.policy, now, self.backend)

    def leaf(self, id: NodeId) -> Certificate:
        chain = self.chains.get(id)
        if chain is None:
            raise NoTrustPath(0, f"no certificates for {id}")
        return chain[-1]

    def find_by_key_id(self, key_id: bytes, now: SimTime) -> NodeId | None:
        for nid in sorted(self.chains):
            try:
                if self.lookup(nid, now).key_id == key_id:
                    return nid
            except NoTrustPath:
                continue
        return None


# -- JSON debug form ----------------------------------------------------------

def cert_to_json(c: Certificate) -> dict:
    out = {
        "schema": "navsec.cert/1",
        "subject": c.subject.raw.hex(),
        "subject_name": c.subject.name,
        "valid_from": c.valid_from,
        "valid_to": c.valid_to,
        "certifier_key": c.certifier_key.to_bytes().hex(),
        "assertions": [],
        "signature": c.sig.to_bytes().hex(),
        "digest": c.digest.hex(),
    }
    for a in c.assertions:
        entry = {"kind": a.kind, "kind_name": a.kind_name, "value": a.value.hex()}
        try:
            view = decode_assertion(a)
        except (MalformedMessage, ValueError, UnicodeDecodeError):
            view = None
        if isinstance(view, PositionFunction):
            entry["decoded"] = {"p0": list(view.p0), "velocity": list(view.velocity), "epoch": view.epoch}
        elif isinstance(view, AntennaSchedule):
            entry["decoded"] = {"azimuth": view.direction.azimuth, "elevation": view.direction.elevation,
                                "rate": view.rate, "epoch": view.epoch}
        elif isinstance(view, PublicKey):
            entry["decoded"] = {"key_id": view.key_id.hex()}
        elif isinstance(view, (int, str)):
            entry["decoded"] = view
        out["assertions"].append(entry)
    return out


def cert_from_json(d: Mapping) -> Certificate:
    """Rebuild a certificate from its debug form; the hex fields are authoritative."""
    try:
        return Certificate(
            NodeId(bytes.fromhex(d["subject"])),
            int(d["valid_from"]),
            int(d["valid_to"]),
            PublicKey.from_bytes(bytes.fromhex(d["certifier_key"])),
            tuple(Assertion(int(a["kind"]), bytes.fromhex(a["value"])) for a in d["assertions"]),
            Signature.from_bytes(bytes.fromhex(d["signature"])),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedMessage(f"bad certificate JSON: {e}") from None
