"""Combining measurements: shared beacon streams, mutual ranging, range plus bearing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..certs import KeyDirectory
from ..core import C, NS_PER_S, Direction, NodeId, Position, SimTime
from ..crypto import CryptoBackend, PrivateKey, PublicKey, Signature, SymmetricKey
from ..solver import PseudorangeEntry, PseudorangeSet, Verdict
from ..wire import MalformedMessage, PkEnvelope, RangeReport, SymEnvelope, decode_as
from .active import AuthenticatedRange, RangingSession, p5_authenticate, seal, unseal
from .errors import BadSignature
from .passive import BeaconObservation, TimingSample, p2_collect
from .station import Station

# Protocol 3 samples beat beacon samples for timing: no signature latency sits
# between the timing packet and its authentication.
_SOURCE_RANK = {"p3": 0, "p2": 1, "p1": 1}


def combine_p1_p2(observations: Iterable[BeaconObservation | TimingSample], quantization: int = 1) -> PseudorangeSet:
    """One pseudorange per navaid from a mixed stream of beacons and reveals."""
    obs = list(observations)
    beacons = [o for o in obs if isinstance(o, BeaconObservation)]
    base = {e.navaid: e for e in p2_collect(beacons, quantization)}
    dups = set(p2_collect(beacons, quantization).duplicates)
    for s in obs:
        if not isinstance(s, TimingSample) or s.position is None:
            continue
        entry = PseudorangeEntry(s.navaid, s.position, s.t, s.rx, "p3")
        cur = base.get(s.navaid)
        if cur is not None:
            dups.add(s.navaid)
            better = (_SOURCE_RANK[entry.source], entry.rx) < (_SOURCE_RANK[cur.source], cur.rx)
            if not better:
                continue
        base[s.navaid] = entry
    entries = tuple(base[k] for k in sorted(base))
    return PseudorangeSet(entries, quantization, frozenset(dups))


# -- daisy-chained mutual ranging -------------------------------------------

def sign_range_report(node: Station, range_m: float, now: SimTime) -> RangeReport:
    unsigned = RangeReport(float(range_m), node.now(now), node.id, Signature(0, b""))
    sig = node.backend.sign(node.keys.private, unsigned.signed_bytes())
    return RangeReport(unsigned.range_m, unsigned.t, node.id, sig)


def make_range_report(node: Station, range_m: float, now: SimTime, key: SymmetricKey) -> SymEnvelope:
    return seal(node.backend, key, sign_range_report(node, range_m, now).encode())


def open_range_report(env: SymEnvelope, key: SymmetricKey, sender_pub: PublicKey,
                      backend: CryptoBackend) -> RangeReport:
    plain = unseal(backend, key, env)
    try:
        rep = decode_as(plain, RangeReport)
    except MalformedMessage:
        raise BadSignature("range report does not decode") from None
    if not backend.verify(sender_pub, rep.signed_bytes(), rep.sig):
        raise BadSignature(str(rep.i))
    return rep


@dataclass(frozen=True)
class DaisyChainResult:
    range_a: float
    range_b: float
    delta_m: float
    elapsed_ns: int
    bound_m: float
    verdict: Verdict


def combine_daisy_chain(report_a: RangeReport, report_b: RangeReport, v_max_closure: float = 1000.0,
                        range_tolerance: float = C / NS_PER_S) -> DaisyChainResult:
    """Compare two nodes' signed ranges to each other.

    Honest ranges can only differ by what the nodes moved between the two
    measurements. A larger gap means someone is delaying one leg only.
    """
    elapsed = abs(report_a.t - report_b.t)
    delta = abs(report_a.range_m - report_b.range_m)
    bound = v_max_closure * elapsed / NS_PER_S + 2 * range_tolerance
    verdict = Verdict.MEACONING_SUSPECTED if delta > bound else Verdict.CLEAN
    first, second = sorted((report_a, report_b), key=lambda r: r.i.raw)
    return DaisyChainResult(first.range_m, second.range_m, delta, elapsed, bound, verdict)


# -- range plus bearing -------------------------------------------------------

@dataclass(frozen=True)
class ConstraintPair:
    """A range sphere and a bearing ray sharing the navaid as their centre."""

    center: Position
    radius_m: float
    bearing: Direction
    navaid: NodeId

    def intersect(self) -> Position:
        return Position.of(self.center.as_array() + self.radius_m * self.bearing.unit_vector())


def constraints_from_range(auth: AuthenticatedRange) -> ConstraintPair:
    return ConstraintPair(auth.p, auth.range_m, auth.d, auth.navaid)


def combine_timing_angle(session: RangingSession, report: PkEnvelope, client_priv: PrivateKey,
                         keys: KeyDirectory, now: SimTime, backend: CryptoBackend) -> ConstraintPair:
    """Authenticate the navaid's signed direction report against the session, then pair it with the range."""
    auth = p5_authenticate(session, report, client_priv, keys, now, backend)
    return constraints_from_range(auth)


def bearing_error(a: Direction, b: Direction) -> float:
    """Angle between two directions, radians."""
    c = float(np.clip(a.unit_vector() @ b.unit_vector(), -1.0, 1.0))
    return math.acos(c)
