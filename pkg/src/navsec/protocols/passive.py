"""Passive-client protocols: signed beacons (1, 2) and hash-committed timing (3)."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .. import crypto
from ..certs import KeyDirectory, NoTrustPath
from ..core import Direction, NodeId, Position, SimTime
from ..crypto import CryptoBackend, Signature
from ..solver import PseudorangeEntry, PseudorangeSet
from ..wire import Beacon, Commit, Reveal
from .errors import (BadCommitSignature, BadSignature, DegenerateGeometry, FutureTimestamp,
                     ReplayedReveal, StaleTimestamp, UnknownCommitment)
from .station import Station

DEFAULT_FRESHNESS_NS = 5_000_000
DEGENERATE_CONDITION = 1e6


@dataclass(frozen=True)
class BeaconObservation:
    navaid: NodeId
    p: Position
    d: Direction
    t: SimTime
    rx: SimTime
    signature_valid: bool
    provenance: tuple = ()
    source: str = "p1"


@dataclass(frozen=True)
class TimingSample:
    """Accepted Protocol 3 reveal: signed-ahead transmit time and local arrival."""

    navaid: NodeId
    t: SimTime
    rx: SimTime
    position: Position | None = None
    provenance: tuple = ()
    source: str = "p3"


# -- Protocol 1 / 2 -----------------------------------------------------------

def p1_emit(navaid: Station, now: SimTime) -> Beacon:
    t = navaid.now(now)
    unsigned = Beacon(navaid.position_at(t), navaid.direction_at(t), t, navaid.id, Signature(0, b""))
    sig = navaid.backend.sign(navaid.keys.private, unsigned.signed_bytes())
    return Beacon(unsigned.p, unsigned.d, unsigned.t, unsigned.i, sig)


def observe_beacon(beacon: Beacon, rx_local: SimTime, keys: KeyDirectory, now: SimTime,
                   backend: CryptoBackend, provenance: tuple = ()) -> BeaconObservation:
    """Check the beacon's signature against the certified key of the claimed navaid."""
    try:
        pub = keys.lookup(beacon.i, now)
        ok = backend.verify(pub, beacon.signed_bytes(), beacon.sig)
    except NoTrustPath:
        ok = False
    return BeaconObservation(beacon.i, beacon.p, beacon.d, beacon.t, rx_local, ok, provenance)


def p1_accept(obs: BeaconObservation, client_now: SimTime, freshness_window: int = DEFAULT_FRESHNESS_NS,
              clock_tolerance: int = 2) -> BeaconObservation:
    """Admit a verified beacon whose timestamp is recent enough to exclude replays."""
    if not obs.signature_valid:
        raise BadSignature(str(obs.navaid))
    age = client_now - obs.t
    if age < -clock_tolerance:
        raise FutureTimestamp(f"{obs.navaid}: timestamp {-age} ns ahead")
    if age > freshness_window:
        raise StaleTimestamp(f"{obs.navaid}: age {age} ns > {freshness_window}")
    return obs


@dataclass(frozen=True)
class BearingFix:
    position: Position
    residual_m: float
    navaids: tuple[NodeId, ...]


def p1_bearing_fix(observations: Iterable[BeaconObservation]) -> BearingFix:
    """Least-squares point closest to the signed rays, one ray per navaid.

    The latest observation per navaid is used. Residual is the RMS
    perpendicular distance from the estimate to each ray's line.
    """
    latest: dict[NodeId, BeaconObservation] = {}
    for o in observations:
        if not o.signature_valid:
            continue
        if o.navaid not in latest or o.rx > latest[o.navaid].rx:
            latest[o.navaid] = o
    if len(latest) < 2:
        raise DegenerateGeometry("need rays from at least two navaids")
    ids = sorted(latest)
    A = np.zeros((3, 3))
    b = np.zeros(3)
    projs = []
    for nid in ids:
        o = latest[nid]
        u = o.d.unit_vector()
        proj = np.eye(3) - np.outer(u, u)
        p = o.p.as_array()
        A += proj
        b += proj @ p
        projs.append((proj, p))
    if np.linalg.cond(A) > DEGENERATE_CONDITION:
        raise DegenerateGeometry("rays are parallel or nearly so")
    x = np.linalg.solve(A, b)
    resid = math.sqrt(sum(float(np.sum((proj @ (x - p)) ** 2)) for proj, p in projs) / len(projs))
    return BearingFix(Position.of(x), resid, tuple(ids))


def p2_collect(beacons: Iterable[BeaconObservation], quantization: int = 1) -> PseudorangeSet:
    """Turn signature-valid beacons into pseudoranges, keeping the earliest arrival per navaid."""
    earliest: dict[NodeId, BeaconObservation] = {}
    dups = set()
    for o in beacons:
        if not o.signature_valid:
            continue
        if o.navaid in earliest:
            dups.add(o.navaid)
            if o.rx >= earliest[o.navaid].rx:
                continue
        earliest[o.navaid] = o
    entries = tuple(PseudorangeEntry(o.navaid, o.p, o.t, o.rx, o.source)
                    for o in sorted(earliest.values(), key=lambda o: o.navaid.raw))
    return PseudorangeSet(entries, quantization, frozenset(dups))


# -- Protocol 3 ---------------------------------------------------------------

def commitment_digest(r: bytes, t2: SimTime) -> bytes:
    return crypto.digest(r + struct.pack(">Q", t2))


def p3_commit(navaid: Station, r: bytes, t2: SimTime, now: SimTime) -> Commit:
    t1 = navaid.now(now)
    unsigned = Commit(commitment_digest(r, t2), t1, navaid.id, Signature(0, b""))
    sig = navaid.backend.sign(navaid.keys.private, unsigned.signed_bytes())
    return Commit(unsigned.digest, t1, navaid.id, sig)


def p3_reveal(navaid: Station, r: bytes, t2: SimTime) -> Reveal:
    return Reveal(r, t2, navaid.id)


@dataclass
class Commitment:
    digest: bytes
    t1: SimTime
    navaid: NodeId
    sig: Signature
    verified: bool = False
    matched: bool = False


@dataclass
class CommitmentStore:
    by_digest: dict = field(default_factory=dict)

    def add(self, c: Commitment) -> None:
        if not c.verified:
            raise ValueError("only verified commitments are stored")
        self.by_digest.setdefault(c.digest, c)

    def __len__(self) -> int:
        return len(self.by_digest)


def p3_commit_accept(pkt1: Commit, keys: KeyDirectory, now: SimTime, backend: CryptoBackend,
                     store: CommitmentStore | None = None) -> Commitment:
    try:
        pub = keys.lookup(pkt1.i, now)
    except NoTrustPath as e:
        raise BadCommitSignature(str(e)) from None
    if not backend.verify(pub, pkt1.signed_bytes(), pkt1.sig):
        raise BadCommitSignature(str(pkt1.i))
    c = Commitment(pkt1.digest, pkt1.t1, pkt1.i, pkt1.sig, verified=True)
    if store is not None:
        store.add(c)
    return c


def p3_reveal_accept(
    pkt2: Reveal,
    store: CommitmentStore,
    rx_local: SimTime,
    positions: Callable[[NodeId, SimTime], Position] | None = None,
    provenance: tuple = (),
) -> TimingSample:
    """Match a reveal to a stored commitment. Hash only: no signature work here."""
    c = store.by_digest.get(commitment_digest(pkt2.r, pkt2.t2))
    if c is None or c.navaid != pkt2.i:
        raise UnknownCommitment(str(pkt2.i))
    if c.matched:
        raise ReplayedReveal(str(pkt2.i))
    c.matched = True
    pos = positions(pkt2.i, pkt2.t2) if positions is not None else None
    return TimingSample(pkt2.i, pkt2.t2, rx_local, pos, provenance)


def timing_samples_to_set(samples: Sequence[TimingSample], quantization: int = 1) -> PseudorangeSet:
    entries = []
    seen = set()
    for s in sorted(samples, key=lambda s: (s.navaid.raw, s.rx)):
        if s.navaid in seen or s.position is None:
            continue
        seen.add(s.navaid)
        entries.append(PseudorangeEntry(s.navaid, s.position, s.t, s.rx, s.source))
    return PseudorangeSet(tuple(entries), quantization)
