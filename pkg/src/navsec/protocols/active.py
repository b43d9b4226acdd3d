"""Active-client ranging: symmetric pre-authenticated (4) and signed after the fact (5).

Range is half the round trip minus the responder's certified, fixed
processing delay. The responder must echo the client's fresh random
``r_c``, so it cannot have answered before the interrogation reached it and
no relay can shorten the measured distance.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum

from ..certs import KeyDirectory, NoTrustPath
from ..core import C, NS_PER_S, Direction, NodeId, Position, SimTime, tof
from ..crypto import CryptoBackend, IntegrityFailure, PrivateKey, PublicKey, Signature, SymmetricKey
from ..wire import (Auth, Interrogate, MalformedMessage, PkEnvelope, Reader, Respond, SymEnvelope,
                    Writer, decode_as)
from .errors import BadSignature, NonceMismatch, Timeout
from .station import Station

NONCE_BYTES = 32
DEFAULT_TIMEOUT_NS = 10_000_000


class SessionState(str, Enum):
    SENT = "Sent"
    COMPLETED = "Completed"
    AUTHENTICATED = "Authenticated"
    FAILED = "Failed"


@dataclass
class RangingSession:
    r_c: bytes
    t: SimTime
    tx_local: SimTime
    protocol: str = "p4"
    key: SymmetricKey | None = None
    rx_local: SimTime | None = None
    r_n: bytes | None = None
    processing_delay: int = 0
    state: SessionState = SessionState.SENT
    range_m: float | None = None
    failure: str | None = None
    # Protocol 5 answers arrive in the clear; every echo of r_c is kept until
    # the signed authentication says which responder was real
    candidates: list = field(default_factory=list)


@dataclass
class NonceCache:
    """Recently answered client nonces, each remembered until ``expiry`` ns after first sight."""

    expiry: int = 2 * 5_000_000
    _seen: dict = field(default_factory=dict)

    def check_and_add(self, r_c: bytes, now: SimTime) -> bool:
        """True if ``r_c`` is fresh (and now remembered); False for a replay."""
        self._purge(now)
        if r_c in self._seen:
            return False
        self._seen[r_c] = now + self.expiry
        return True

    def _purge(self, now: SimTime) -> None:
        stale = [k for k, exp in self._seen.items() if exp < now]
        for k in stale:
            del self._seen[k]

    def __contains__(self, r_c: bytes) -> bool:
        return r_c in self._seen

    def __len__(self) -> int:
        return len(self._seen)


def _range_from_rtt(rtt_ns: int, processing_delay: int) -> float:
    return C * (rtt_ns - processing_delay) / NS_PER_S / 2.0


def seal(backend: CryptoBackend, key: SymmetricKey, plaintext: bytes) -> SymEnvelope:
    nonce = backend.new_nonce()
    shell = SymEnvelope(key.alg, key.key_id, nonce, b"")
    ct = backend.sym_encrypt(key, nonce, plaintext, shell.aad())
    return SymEnvelope(key.alg, key.key_id, nonce, ct.data)


def _expect(msg, cls):
    if not isinstance(msg, cls):
        raise MalformedMessage(f"expected {cls.__name__}, got {type(msg).__name__}")
    return msg


def _open(backend: CryptoBackend, priv: PrivateKey, env: PkEnvelope) -> bytes:
    # the recipient id rides outside the ciphertext, so check it explicitly
    if _expect(env, PkEnvelope).recipient != backend.public_key(priv).key_id:
        raise IntegrityFailure("envelope is addressed to another key")
    return backend.pk_decrypt(priv, env.as_ciphertext())


def unseal(backend: CryptoBackend, key: SymmetricKey, env: SymEnvelope) -> bytes:
    _expect(env, SymEnvelope)
    return backend.sym_decrypt(key, env.as_ciphertext(), env.aad())


def _is_current(stamp: SimTime, now_local: SimTime, window: int) -> bool:
    return abs(now_local - stamp) <= window


# -- Protocol 4 ---------------------------------------------------------------

def p4_interrogate(client: Station, key: SymmetricKey, now: SimTime) -> tuple[SymEnvelope, RangingSession]:
    local = client.now(now)
    r_c = client.backend.random_bytes(NONCE_BYTES)
    env = seal(client.backend, key, Interrogate(r_c, local).encode())
    return env, RangingSession(r_c, local, local, "p4", key)


def p4_respond(
    navaid: Station,
    msg: SymEnvelope,
    valid_keys,
    nonce_cache: NonceCache,
    now: SimTime,
    freshness_window: int = 5_000_000,
    issued: dict | None = None,
) -> SymEnvelope | None:
    """Answer an interrogation that some valid key opens; silently drop anything else.

    ``issued`` collects ``r_n -> key`` for every answer, which lets a node
    that is also ranging back (the daisy chain) recognise the echo.
    """
    local = navaid.now(now)
    opened = None
    # every key is tried so the work done does not depend on which one matches
    for key in valid_keys:
        try:
            plain = unseal(navaid.backend, key, msg)
        except IntegrityFailure:
            continue
        if opened is None:
            opened = (key, plain)
    if opened is None:
        return None
    key, plain = opened
    try:
        q = decode_as(plain, Interrogate)
    except MalformedMessage:
        return None
    if not _is_current(q.t, local, freshness_window):
        return None
    if not nonce_cache.check_and_add(q.r_c, local):
        return None
    r_n = navaid.backend.random_bytes(NONCE_BYTES)
    if issued is not None:
        issued[r_n] = key
    return seal(navaid.backend, key, Respond(q.r_c, r_n).encode())


def p4_complete(session: RangingSession, response: SymEnvelope, rx_local: SimTime, processing_delay: int,
                backend: CryptoBackend, timeout: int = DEFAULT_TIMEOUT_NS) -> float:
    if session.key is None:
        raise ValueError("Protocol 4 session without a key")
    if rx_local - session.tx_local > timeout:
        session.state = SessionState.FAILED
        session.failure = "Timeout"
        raise Timeout(f"{rx_local - session.tx_local} ns > {timeout}")
    plain = unseal(backend, session.key, response)
    try:
        resp = decode_as(plain, Respond)
    except MalformedMessage:
        raise IntegrityFailure("response does not decode") from None
    if resp.r_c != session.r_c or session.state is not SessionState.SENT:
        raise NonceMismatch("response does not echo this session's r_c")
    _finish(session, resp.r_n, rx_local, processing_delay)
    return session.range_m


def _finish(session: RangingSession, r_n: bytes, rx_local: SimTime, processing_delay: int) -> None:
    session.rx_local = rx_local
    session.r_n = r_n
    session.processing_delay = processing_delay
    session.range_m = _range_from_rtt(rx_local - session.tx_local, processing_delay)
    session.state = SessionState.COMPLETED


def expire_session(session: RangingSession, now_local: SimTime, timeout: int = DEFAULT_TIMEOUT_NS) -> bool:
    if session.state is SessionState.SENT and now_local - session.tx_local > timeout:
        session.state = SessionState.FAILED
        session.failure = "Timeout"
        return True
    return False


# Protocol 4 key agreement: the client picks a session key and sends it
# signed and public-key encrypted to the navaid, which answers with a
# signed acknowledgement. Both sides end up authenticated.

_OFFER = b"navsec/p4-offer"
_ACK = b"navsec/p4-ack"


def p4_key_offer(client: Station, navaid_id: NodeId, navaid_pub: PublicKey, now: SimTime) -> tuple[SymmetricKey, PkEnvelope]:
    be = client.backend
    key = be.new_symmetric_key()
    body = Writer().fixed(key.key, 32).fixed(key.key_id, 8).fixed(client.id.raw, 8) \
        .fixed(navaid_id.raw, 8).u64(client.now(now)).getvalue()
    sig = be.sign(client.keys.private, _OFFER + body)
    ct = be.pk_encrypt(navaid_pub, Writer().lp(body).lp(sig.to_bytes()).getvalue())
    return key, PkEnvelope(ct.alg, navaid_pub.key_id, ct.nonce, ct.data)


def p4_key_accept(navaid: Station, offer: PkEnvelope, keys: KeyDirectory, now: SimTime,
                  max_age: int = 60 * NS_PER_S) -> tuple[SymmetricKey, NodeId, Signature]:
    be = navaid.backend
    plain = _open(be, navaid.keys.private, offer)
    try:
        r = Reader(plain)
        body, sig_raw = r.lp(), r.lp()
        r.done()
        b = Reader(body)
        k, kid, cid, nid, stamp = b.fixed(32), b.fixed(8), b.node_id(), b.node_id(), b.u64()
        b.done()
        sig = Signature.from_bytes(sig_raw)
    except (MalformedMessage, ValueError):
        raise IntegrityFailure("key offer does not decode") from None
    if nid != navaid.id:
        raise BadSignature("key offer addressed to another navaid")
    try:
        client_pub = keys.lookup(cid, now)
    except NoTrustPath as e:
        raise BadSignature(str(e)) from None
    if not be.verify(client_pub, _OFFER + body, sig):
        raise BadSignature(f"key offer from {cid}")
    if not _is_current(stamp, navaid.now(now), max_age):
        raise BadSignature("key offer is stale")
    key = SymmetricKey(k, kid, offer.alg)
    ack = be.sign(navaid.keys.private, _ACK + kid + cid.raw + navaid.id.raw)
    return key, cid, ack


def p4_key_confirm(key: SymmetricKey, ack: Signature, client_id: NodeId, navaid_id: NodeId,
                   navaid_pub: PublicKey, backend: CryptoBackend) -> None:
    if not backend.verify(navaid_pub, _ACK + key.key_id + client_id.raw + navaid_id.raw, ack):
        raise BadSignature("navaid did not acknowledge the key")


# -- Protocol 5 ---------------------------------------------------------------

@dataclass(frozen=True)
class PendingAuth:
    """Navaid-side record of an answered Protocol 5 interrogation."""

    r_c: bytes
    r_n: bytes
    t: SimTime
    p: Position
    d: Direction


@dataclass(frozen=True)
class AuthenticatedRange:
    range_m: float
    navaid: NodeId
    p: Position
    d: Direction
    t: SimTime
    r_c: bytes
    r_n: bytes


def p5_interrogate(client: Station, now: SimTime) -> tuple[Interrogate, RangingSession]:
    local = client.now(now)
    r_c = client.backend.random_bytes(NONCE_BYTES)
    return Interrogate(r_c, local), RangingSession(r_c, local, local, "p5")


def p5_respond(navaid: Station, msg: Interrogate, nonce_cache: NonceCache, now: SimTime,
               freshness_window: int = 5_000_000,
               arrival_direction: Direction | None = None) -> tuple[Respond, PendingAuth] | None:
    """Answer in the clear. ``arrival_direction`` is what a direction-finding navaid measured."""
    local = navaid.now(now)
    if not _is_current(msg.t, local, freshness_window):
        return None
    if not nonce_cache.check_and_add(msg.r_c, local):
        return None
    r_n = navaid.backend.random_bytes(NONCE_BYTES)
    d = arrival_direction if arrival_direction is not None else navaid.direction_at(msg.t)
    return Respond(msg.r_c, r_n), PendingAuth(msg.r_c, r_n, msg.t, navaid.position_at(msg.t), d)


def p5_complete(session: RangingSession, resp: Respond, rx_local: SimTime, processing_delay: int,
                timeout: int = DEFAULT_TIMEOUT_NS) -> float:
    if rx_local - session.tx_local > timeout:
        session.state = SessionState.FAILED
        session.failure = "Timeout"
        raise Timeout(f"{rx_local - session.tx_local} ns > {timeout}")
    if resp.r_c != session.r_c or session.state not in (SessionState.SENT, SessionState.COMPLETED):
        raise NonceMismatch("response does not echo this session's r_c")
    session.candidates.append((resp.r_n, rx_local, processing_delay))
    if session.state is SessionState.SENT:
        _finish(session, resp.r_n, rx_local, processing_delay)
    return _range_from_rtt(rx_local - session.tx_local, processing_delay)


def p5_auth_message(navaid: Station, pending: PendingAuth, client_pub: PublicKey) -> PkEnvelope:
    be = navaid.backend
    unsigned = Auth(pending.p, pending.d, pending.t, navaid.id, pending.r_c, pending.r_n, Signature(0, b""))
    sig = be.sign(navaid.keys.private, unsigned.signed_bytes())
    signed = Auth(unsigned.p, unsigned.d, unsigned.t, unsigned.i, unsigned.r_c, unsigned.r_n, sig)
    ct = be.pk_encrypt(client_pub, signed.encode())
    return PkEnvelope(ct.alg, client_pub.key_id, ct.nonce, ct.data)


def p5_open_auth(auth_env: PkEnvelope, client_priv: PrivateKey, backend: CryptoBackend) -> Auth:
    plain = _open(backend, client_priv, auth_env)
    try:
        return decode_as(plain, Auth)
    except MalformedMessage:
        raise IntegrityFailure("authentication does not decode") from None


def p5_accept_auth(session: RangingSession, auth: Auth, keys: KeyDirectory, now: SimTime,
                   backend: CryptoBackend) -> AuthenticatedRange:
    # one authentication per session; a second one is a replay or a competing claim
    if session.state is not SessionState.COMPLETED or session.r_n is None:
        raise NonceMismatch(f"session is {session.state.value}, not Completed")
    try:
        pub = keys.lookup(auth.i, now)
    except NoTrustPath as e:
        raise BadSignature(str(e)) from None
    if not backend.verify(pub, auth.signed_bytes(), auth.sig):
        raise BadSignature(str(auth.i))
    if auth.r_c != session.r_c or auth.t != session.t:
        raise NonceMismatch("authentication is for a different exchange")
    match = [c for c in session.candidates if c[0] == auth.r_n]
    if match:
        _finish(session, *match[0])
    elif auth.r_n != session.r_n:
        raise NonceMismatch("no response carried the authenticated r_n")
    session.state = SessionState.AUTHENTICATED
    return AuthenticatedRange(session.range_m, auth.i, auth.p, auth.d, auth.t, auth.r_c, auth.r_n)


def p5_authenticate(session: RangingSession, auth_env: PkEnvelope, client_priv: PrivateKey,
                    keys: KeyDirectory, now: SimTime, backend: CryptoBackend) -> AuthenticatedRange:
    """Bind a completed range to the navaid's signed position via both nonces.

    Works for any completed session, so a Protocol 4 exchange followed by a
    signed report is authenticated the same way.
    """
    return p5_accept_auth(session, p5_open_auth(auth_env, client_priv, backend), keys, now, backend)


def p5_exchange(client: Station, navaid: Station, now: SimTime, nonce_cache: NonceCache | None = None,
                extra_delay_ns: int = 0) -> tuple[RangingSession, PendingAuth]:
    """Run a Protocol 5 exchange over a direct line-of-sight link.

    ``extra_delay_ns`` is added to each direction, as a relay would.
    Returns the completed client session and the navaid's pending record.
    """
    cache = nonce_cache if nonce_cache is not None else NonceCache()
    q, session = p5_interrogate(client, now)
    arrive = now + tof(client.trajectory.at(now), navaid.trajectory.at(now)) + extra_delay_ns
    out = p5_respond(navaid, q, cache, arrive)
    if out is None:
        session.state = SessionState.FAILED
        session.failure = "dropped"
        return session, None
    resp, pending = out
    sent = arrive + navaid.processing_delay
    back = sent + tof(navaid.trajectory.at(sent), client.trajectory.at(sent)) + extra_delay_ns
    p5_complete(session, resp, client.now(back), navaid.processing_delay)
    return session, pending
