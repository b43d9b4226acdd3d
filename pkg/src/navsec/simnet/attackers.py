"""The attacker repertoire.

Attackers touch the world only through what they hear and what they
transmit. ``KeyCompromise`` is the one capability that hands over secrets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..certs import KeyDirectory, NoTrustPath
from ..core import Direction, NodeId, Position, SimTime
from ..crypto import KeyPair, Signature, SymmetricKey
from ..protocols import NONCE_BYTES, Station, commitment_digest, seal, unseal
from ..wire import (Auth, AuthRequest, Beacon, Commit, Interrogate, Message, PkEnvelope, Respond,
                    Reveal, SymEnvelope, decode_as)


def _matches(sel, who: str) -> bool:
    return sel == "*" or who in sel


def _in_window(window, t: float) -> bool:
    return window is None or window[0] <= t <= window[1]


@dataclass(frozen=True)
class DelayMeacon:
    delay_ns: int
    sources: object = "*"
    victims: object = "*"
    bidirectional: bool = True
    overpower: bool = True
    window_ns: tuple | None = None

    def intercepts(self, src: str, dst: str, t: float) -> bool:
        if not _in_window(self.window_ns, t):
            return False
        forward = _matches(self.sources, src) and _matches(self.victims, dst)
        back = self.bidirectional and _matches(self.victims, src) and _matches(self.sources, dst)
        return forward or back


@dataclass(frozen=True)
class BentPipe:
    """Hears at ``rx_position`` and retransmits from the attacker's own position."""

    rx_position: Position
    latency_ns: int = 0
    sources: object = "*"
    victims: object = "*"
    bidirectional: bool = True
    overpower: bool = True
    window_ns: tuple | None = None

    intercepts = DelayMeacon.intercepts

    @property
    def delay_ns(self) -> int:
        return self.latency_ns


@dataclass(frozen=True)
class Replay:
    delay_ns: int = 50_000_000
    sources: object = "*"
    victims: object = "*"
    messages: object = "*"
    max_replays: int | None = None

    def wants(self, src: str, msg_name: str) -> bool:
        return _matches(self.sources, src) and _matches(self.messages, msg_name)


@dataclass(frozen=True)
class Spoof:
    message: str
    claim: str | None = None
    position: Position | None = None
    start_ns: int = 0
    period_ns: int = 5_000_000
    count: int = 1
    victims: object = "*"

    @property
    def timed(self) -> bool:
        return self.message in ("beacon", "commit", "reveal")


@dataclass(frozen=True)
class KeyCompromise:
    node: str


def capability_from_dict(d: dict):
    t = d["type"]
    sel = lambda v: v if v == "*" else tuple(v)  # noqa: E731
    win = tuple(d["window_ns"]) if d.get("window_ns") else None
    if t == "delay_meacon":
        return DelayMeacon(d["delay_ns"], sel(d["sources"]), sel(d["victims"]), d["bidirectional"],
                           d["overpower"], win)
    if t == "bent_pipe":
        return BentPipe(Position.of(d["rx_position"]), d["latency_ns"], sel(d["sources"]), sel(d["victims"]),
                        d["bidirectional"], d["overpower"], win)
    if t == "replay":
        return Replay(d["delay_ns"], sel(d["sources"]), sel(d["victims"]), sel(d["messages"]), d["max_replays"])
    if t == "spoof":
        pos = None if d.get("position") is None else Position.of(d["position"])
        return Spoof(d["message"], d.get("claim"), pos, d["start_ns"], d["period_ns"], d["count"], sel(d["victims"]))
    if t == "key_compromise":
        return KeyCompromise(d["node"])
    raise ValueError(f"unknown capability {t!r}")


@dataclass(frozen=True)
class Emission:
    time_ns: float
    position: Position
    data: bytes
    provenance: tuple[str, ...]
    targets: frozenset | None = None


def attacker_delay_meacon(attacker: str, cap: DelayMeacon, heard_ns: float, position: Position,
                          data: bytes, provenance: tuple[str, ...]) -> Emission:
    """Re-emit the exact bytes ``delay_ns`` after hearing them."""
    return Emission(heard_ns + cap.delay_ns, position, data, provenance + (attacker,))


def attacker_bent_pipe(attacker: str, cap: BentPipe, heard_at_rx_ns: float, tx_position: Position,
                       data: bytes, provenance: tuple[str, ...]) -> Emission:
    """Re-emit what the remote antenna heard, from the attacker's transmitter."""
    return Emission(heard_at_rx_ns + cap.latency_ns, tx_position, data, provenance + (attacker,))


def attacker_replay(attacker: str, cap: Replay, heard_ns: float, position: Position, data: bytes,
                    provenance: tuple[str, ...], victims: frozenset | None) -> Emission:
    return Emission(heard_ns + cap.delay_ns, position, data, provenance + (attacker,), victims)


@dataclass
class Forger:
    """Everything an attacker can use to fabricate traffic.

    ``stolen`` holds key pairs of compromised nodes and ``stolen_sym`` their
    Protocol 4 session keys. The public directory is fair game.
    """

    station: Station
    directory: KeyDirectory
    stolen: dict = field(default_factory=dict)
    stolen_sym: dict = field(default_factory=dict)
    heard_interrogations: dict = field(default_factory=dict)
    own_answers: dict = field(default_factory=dict)
    open_commits: list = field(default_factory=list)

    def _signing_key(self, claim: NodeId) -> KeyPair:
        return self.stolen.get(claim.name, self.station.keys)

    def _claim(self, cap: Spoof) -> NodeId:
        return NodeId.from_name(cap.claim) if cap.claim else self.station.id

    def _position(self, cap: Spoof, now: SimTime) -> Position:
        return cap.position if cap.position is not None else self.station.trajectory.at(now)

    def forged_beacon(self, cap: Spoof, now: SimTime) -> Beacon:
        claim = self._claim(cap)
        t = self.station.now(now)
        unsigned = Beacon(self._position(cap, now), Direction(0.0, 0.0), t, claim, Signature(0, b""))
        sig = self.station.backend.sign(self._signing_key(claim).private, unsigned.signed_bytes())
        return Beacon(unsigned.p, unsigned.d, t, claim, sig)

    def forged_commit(self, cap: Spoof, now: SimTime, lead_ns: int) -> tuple[Commit, Reveal]:
        claim = self._claim(cap)
        t1 = self.station.now(now)
        r = self.station.backend.random_bytes(NONCE_BYTES)
        t2 = t1 + lead_ns
        unsigned = Commit(commitment_digest(r, t2), t1, claim, Signature(0, b""))
        sig = self.station.backend.sign(self._signing_key(claim).private, unsigned.signed_bytes())
        return Commit(unsigned.digest, t1, claim, sig), Reveal(r, t2, claim)

    def forged_reveal(self, cap: Spoof, now: SimTime) -> Reveal:
        return Reveal(self.station.backend.random_bytes(NONCE_BYTES), self.station.now(now), self._claim(cap))

    def forged_p4_response(self, heard: SymEnvelope) -> SymEnvelope:
        key = self.stolen_sym.get(heard.key_id)
        be = self.station.backend
        if key is not None:
            # with the session key the attacker can read r_c and answer properly
            q = decode_as(unseal(be, key, heard), Interrogate)
            return seal(be, key, Respond(q.r_c, be.random_bytes(NONCE_BYTES)).encode())
        fake_len = len(Respond(b"\0" * NONCE_BYTES, b"\0" * NONCE_BYTES).encode()) + 16
        return SymEnvelope(heard.alg, heard.key_id, be.new_nonce(), be.random_bytes(fake_len))

    def note_interrogation(self, q: Interrogate) -> None:
        self.heard_interrogations[q.r_c] = q.t

    def forged_p5_response(self, q: Interrogate) -> Respond:
        r_n = self.station.backend.random_bytes(NONCE_BYTES)
        self.own_answers[q.r_c] = r_n
        return Respond(q.r_c, r_n)

    def forged_auth(self, cap: Spoof, req: AuthRequest, now: SimTime) -> PkEnvelope | None:
        try:
            client_pub = self.directory.lookup(req.i, now)
        except NoTrustPath:
            return None
        claim = self._claim(cap)
        be = self.station.backend
        r_n = self.own_answers.get(req.r_c, be.random_bytes(NONCE_BYTES))
        t = self.heard_interrogations.get(req.r_c, self.station.now(now))
        unsigned = Auth(self._position(cap, now), Direction(0.0, 0.0), t, claim, req.r_c, r_n, Signature(0, b""))
        sig = be.sign(self._signing_key(claim).private, unsigned.signed_bytes())
        signed = Auth(unsigned.p, unsigned.d, t, claim, req.r_c, r_n, sig)
        ct = be.pk_encrypt(client_pub, signed.encode())
        return PkEnvelope(ct.alg, client_pub.key_id, ct.nonce, ct.data)


def attacker_spoof(forger: Forger, cap: Spoof, now: SimTime, trigger: Message | None = None,
                   lead_ns: int = 2_000_000) -> list[Message]:
    """Fabricated messages for one spoofing opportunity: a timer tick or a heard trigger."""
    kind = cap.message
    if kind == "beacon":
        return [forger.forged_beacon(cap, now)]
    if kind == "commit":
        commit, reveal = forger.forged_commit(cap, now, lead_ns)
        forger.open_commits.append(reveal)
        return [commit]
    if kind == "reveal":
        return [forger.forged_reveal(cap, now)]
    if kind == "p4_response" and isinstance(trigger, SymEnvelope):
        return [forger.forged_p4_response(trigger)]
    if kind == "p5_response" and isinstance(trigger, Interrogate):
        return [forger.forged_p5_response(trigger)]
    if kind == "auth" and isinstance(trigger, AuthRequest):
        env = forger.forged_auth(cap, trigger, now)
        return [] if env is None else [env]
    return []
