"""Per-node behaviour inside the simulator.

Each node sees only its own state, its clock, the public key directory and
the bytes that reach its antenna. All interaction goes through ``sim``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from .. import protocols as P
from ..certs import KeyDirectory, NoTrustPath, CertError, navaid_position_at, processing_delay_of
from ..core import C, NS_PER_S, Direction, NodeId, Position, distance
from ..crypto import IntegrityFailure
from ..scenario import NodeSpec
from ..solver import (NoConvergence, SingularGeometry, Verdict, pairwise_timestamp_check, solve_fix,
                      time_lower_bound)
from ..wire import (AUTHREQ, BEACON, COMMIT, INTERROGATE, PK_ENVELOPE, RANGEREPORT, RESPOND, REVEAL,
                    SYM_ENVELOPE, AuthRequest, Beacon, Commit, Interrogate, MalformedMessage, PkEnvelope,
                    RangeReport, Respond, Reveal, SymEnvelope, decode, decode_as)
from .attackers import (BentPipe, DelayMeacon, Forger, KeyCompromise, Replay, Spoof, attacker_replay,
                        attacker_spoof)

M_PER_NS = C / NS_PER_S


def _ids(xs):
    return [x.name if isinstance(x, NodeId) else x for x in xs]


@dataclass
class Node:
    name: str
    spec: NodeSpec
    station: P.Station
    directory: KeyDirectory
    sim: object
    LISTENS: frozenset = frozenset()

    @property
    def role(self) -> str:
        return self.spec.role

    def listens(self, msg_type: int) -> bool:
        return msg_type in self.LISTENS

    def local(self, t: int) -> int:
        return self.station.now(t)

    def on_timer(self, t: int, payload) -> None:
        pass

    def on_receive(self, t: int, data: bytes, provenance: tuple, emitter: Position) -> None:
        pass

    def verdict(self, t: int, protocol: str, result: str, reason: str | None = None, **extra) -> None:
        self.sim.record(t, "verdict", node=self.name, protocol=protocol, result=result, reason=reason, **extra)


@dataclass
class NavaidNode(Node):
    LISTENS: frozenset = frozenset({SYM_ENVELOPE, INTERROGATE, AUTHREQ})
    sym_keys: dict = field(default_factory=dict)
    nonce_cache: P.NonceCache = None
    pending: dict = field(default_factory=dict)
    issued_at: dict = field(default_factory=dict)
    daisy: dict = field(default_factory=dict)

    def on_timer(self, t, payload):
        kind = payload[0]
        if self.local(t) < 0:
            return
        if kind == "beacon":
            self.sim.transmit(self.name, t, P.p1_emit(self.station, t).encode())
        elif kind == "commit":
            be = self.station.backend
            r = be.random_bytes(P.NONCE_BYTES)
            t2 = self.local(t) + self.sim.params.p3_lead_ns
            self.sim.transmit(self.name, t, P.p3_commit(self.station, r, t2, t).encode())
            self.sim.timer(self.station.clock.true_time_for(t2), self.name, ("reveal", r, t2))
        elif kind == "reveal":
            _, r, t2 = payload
            self.sim.transmit(self.name, t, P.p3_reveal(self.station, r, t2).encode())

    def on_receive(self, t, data, provenance, emitter):
        msg_type = data[0]
        if msg_type == SYM_ENVELOPE and "p4" in self.spec.protocols:
            self._on_envelope(t, data, provenance)
        elif msg_type == INTERROGATE and "p5" in self.spec.protocols:
            self._on_interrogate(t, data, provenance, emitter)
        elif msg_type == AUTHREQ and "p5" in self.spec.protocols:
            self._on_authreq(t, data)

    def _owner(self, key_id: bytes):
        for client, key in sorted(self.sym_keys.items()):
            if key.key_id == key_id:
                return client, key
        return None, None

    def _on_envelope(self, t, data, provenance):
        try:
            env = decode_as(data, SymEnvelope)
        except MalformedMessage:
            return
        client, key = self._owner(env.key_id)
        plain = None
        if key is not None:
            try:
                plain = P.unseal(self.station.backend, key, env)
            except IntegrityFailure:
                plain = None
        if plain is None:
            self.sim.record(t, "drop", level="event", node=self.name, reason="no key opens envelope",
                            provenance=list(provenance))
            return
        inner = plain[0] if plain else None
        if inner == INTERROGATE:
            keys = [self.sym_keys[c] for c in sorted(self.sym_keys)]
            fresh = {}
            resp = P.p4_respond(self.station, env, keys, self.nonce_cache, t,
                                self.sim.params.freshness_window_ns, issued=fresh)
            if resp is None:
                self.sim.record(t, "drop", level="event", node=self.name, reason="stale or replayed interrogation",
                                provenance=list(provenance))
                return
            send = t + self.spec.processing_delay_ns
            for r_n in fresh:
                self.issued_at[r_n] = (self.local(send), client)
            self.sim.transmit(self.name, send, resp.encode())
        elif inner == RESPOND:
            self._daisy_echo(t, plain, key, client, provenance)
        elif inner == RANGEREPORT:
            self._daisy_report(t, env, key, client)

    def _daisy_echo(self, t, plain, key, client, provenance):
        try:
            echo = decode_as(plain, Respond)
        except MalformedMessage:
            return
        entry = self.issued_at.pop(echo.r_c, None)
        if entry is None:
            self.verdict(t, "daisy", "reject", "NonceMismatch", peer=client)
            return
        tx_local, _ = entry
        try:
            peer_delay = processing_delay_of(self.directory.leaf(NodeId.from_name(client)))
        except (NoTrustPath, CertError):
            return
        rtt = self.local(t) - tx_local
        range_m = M_PER_NS * (rtt - peer_delay) / 2.0
        own = P.sign_range_report(self.station, range_m, t)
        state = self.daisy.setdefault(client, {})
        state["own"] = own
        self.sim.record(t, "daisy_leg", node=self.name, peer=client, range_m=range_m,
                        true_range_m=self.sim.true_range(self.name, client, t))
        self.sim.transmit(self.name, t + self.sim.params.sign_latency_ns,
                          P.seal(self.station.backend, key, own.encode()).encode())
        self._daisy_maybe_combine(t, client)

    def _daisy_report(self, t, env, key, client):
        try:
            pub = self.directory.lookup(NodeId.from_name(client), t)
            rep = P.open_range_report(env, key, pub, self.station.backend)
        except (NoTrustPath, P.BadSignature, IntegrityFailure):
            self.verdict(t, "daisy", "reject", "BadSignature", peer=client)
            return
        self.daisy.setdefault(client, {})["peer"] = rep
        self._daisy_maybe_combine(t + self.sim.params.verify_latency_ns, client)

    def _daisy_maybe_combine(self, t, peer):
        self.sim.daisy_combine(self, t, peer, self.daisy.get(peer, {}))

    def _on_interrogate(self, t, data, provenance, emitter):
        try:
            q = decode_as(data, Interrogate)
        except MalformedMessage:
            return
        arrival = None
        if self.spec.measures_direction:
            here = self.station.trajectory.at(t)
            v = (emitter - here).as_array()
            if float(v @ v) > 0:
                arrival = Direction.from_vector(v)
        out = P.p5_respond(self.station, q, self.nonce_cache, t, self.sim.params.freshness_window_ns,
                           arrival_direction=arrival)
        if out is None:
            self.sim.record(t, "drop", level="event", node=self.name, reason="stale or replayed interrogation",
                            provenance=list(provenance))
            return
        resp, pending = out
        self.pending[q.r_c] = pending
        self.sim.transmit(self.name, t + self.spec.processing_delay_ns, resp.encode())

    def _on_authreq(self, t, data):
        try:
            req = decode_as(data, AuthRequest)
        except MalformedMessage:
            return
        pending = self.pending.pop(req.r_c, None)
        if pending is None:
            return
        try:
            client_pub = self.directory.lookup(req.i, t)
        except NoTrustPath:
            return
        env = P.p5_auth_message(self.station, pending, client_pub)
        delay = self.sim.params.sign_latency_ns + self.sim.params.pk_encrypt_latency_ns
        self.sim.transmit(self.name, t + delay, env.encode())


@dataclass
class ClientNode(Node):
    LISTENS: frozenset = frozenset({BEACON, COMMIT, REVEAL, SYM_ENVELOPE, RESPOND, PK_ENVELOPE})
    sym_keys: dict = field(default_factory=dict)
    beacons: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    store: P.CommitmentStore = field(default_factory=P.CommitmentStore)
    sessions: list = field(default_factory=list)
    daisy: dict = field(default_factory=dict)

    @property
    def q(self) -> int:
        return self.station.clock.quantization

    def _uses(self, *protos) -> bool:
        return any(p in self.spec.protocols for p in protos)

    # -- timers -------------------------------------------------------------
    def on_timer(self, t, payload):
        kind = payload[0]
        if kind == "fix":
            self._fix(t)
        elif kind == "range":
            self._start_ranging(t, payload[1])
        elif kind == "daisy":
            self._start_daisy(t, payload[1])
        elif kind == "timeout":
            s = payload[1]
            if P.expire_session(s.session, self.local(t), self.sim.params.session_timeout_ns):
                self.sim.record(t, "range", node=self.name, protocol=s.protocol, navaid=s.navaid,
                                state=s.session.state.value, reason="Timeout", range_m=None)

    def _start_ranging(self, t, spec):
        navaid = spec.navaid
        if spec.protocol == "p4":
            key = self.sym_keys[navaid]
            env, session = P.p4_interrogate(self.station, key, t)
            data = env.encode()
        else:
            q, session = P.p5_interrogate(self.station, t)
            data = q.encode()
        tracked = Tracked(session, spec.protocol, navaid, t, spec)
        self.sessions.append(tracked)
        self.sim.transmit(self.name, t, data)
        self.sim.timer(t + self.sim.params.session_timeout_ns + 1, self.name, ("timeout", tracked))

    def _start_daisy(self, t, spec):
        key = self.sym_keys[spec.peer]
        env, session = P.p4_interrogate(self.station, key, t)
        tracked = Tracked(session, "p4", spec.peer, t, None, daisy=True)
        self.sessions.append(tracked)
        self.sim.transmit(self.name, t, env.encode())
        self.sim.timer(t + self.sim.params.session_timeout_ns + 1, self.name, ("timeout", tracked))

    # -- receptions ---------------------------------------------------------
    def on_receive(self, t, data, provenance, emitter):
        handler = {
            BEACON: self._on_beacon, COMMIT: self._on_commit, REVEAL: self._on_reveal,
            SYM_ENVELOPE: self._on_envelope, RESPOND: self._on_respond, PK_ENVELOPE: self._on_auth,
        }[data[0]]
        handler(t, data, provenance)

    def _ops(self):
        return dict(self.station.backend.op_counts)

    def _op_delta(self, before):
        after = self.station.backend.op_counts
        return {k: after[k] - before.get(k, 0) for k in sorted(after) if after[k] - before.get(k, 0)}

    def _origin(self, provenance, claimed):
        origin = provenance[0] if provenance else None
        return {"origin": origin, "provenance": list(provenance), "claimed": claimed,
                "forged": origin != claimed}

    def _on_beacon(self, t, data, provenance):
        if not self._uses("p1", "p2", "combined"):
            return
        proto = "p2" if self._uses("p2", "combined") else "p1"
        try:
            b = decode_as(data, Beacon)
        except MalformedMessage:
            self.verdict(t, proto, "reject", "Malformed", provenance=list(provenance))
            return
        before = self._ops()
        rx = self.local(t)
        obs = P.observe_beacon(b, rx, self.directory, t, self.station.backend, provenance)
        obs = P.BeaconObservation(obs.navaid, obs.p, obs.d, obs.t, obs.rx, obs.signature_valid, provenance, proto)
        try:
            P.p1_accept(obs, rx, self.sim.params.freshness_window_ns, self.sim.clock_tolerance)
        except P.ProtocolReject as e:
            self.verdict(t, proto, "reject", e.reason, ops=self._op_delta(before),
                         **self._origin(provenance, b.i.name))
            return
        self.beacons.append(obs)
        self.verdict(t, proto, "accept", None, ops=self._op_delta(before), beacon_t=b.t,
                     decided_at=t + self.sim.params.verify_latency_ns, **self._origin(provenance, b.i.name))

    def _on_commit(self, t, data, provenance):
        if not self._uses("p3", "combined"):
            return
        try:
            c = decode_as(data, Commit)
        except MalformedMessage:
            return
        before = self._ops()
        try:
            P.p3_commit_accept(c, self.directory, t, self.station.backend, self.store)
        except P.ProtocolReject as e:
            self.verdict(t, "p3_commit", "reject", e.reason, ops=self._op_delta(before),
                         **self._origin(provenance, c.i.name))
            return
        self.verdict(t, "p3_commit", "accept", None, ops=self._op_delta(before),
                     **self._origin(provenance, c.i.name))

    def _navaid_position(self, nid: NodeId, t2: int) -> Position:
        return navaid_position_at(self.directory.leaf(nid), t2)

    def _on_reveal(self, t, data, provenance):
        if not self._uses("p3", "combined"):
            return
        try:
            r = decode_as(data, Reveal)
        except MalformedMessage:
            return
        before = self._ops()
        try:
            s = P.p3_reveal_accept(r, self.store, self.local(t), self._navaid_position, provenance)
        except (P.ProtocolReject, NoTrustPath, CertError) as e:
            reason = e.reason if isinstance(e, P.ProtocolReject) else "UnknownCommitment"
            self.verdict(t, "p3", "reject", reason, ops=self._op_delta(before),
                         **self._origin(provenance, r.i.name))
            return
        self.samples.append(s)
        self.verdict(t, "p3", "accept", None, ops=self._op_delta(before), **self._origin(provenance, r.i.name))

    def _key_owner(self, key_id):
        for navaid, key in sorted(self.sym_keys.items()):
            if key.key_id == key_id:
                return navaid, key
        return None, None

    def _on_envelope(self, t, data, provenance):
        try:
            env = decode_as(data, SymEnvelope)
        except MalformedMessage:
            return
        navaid, key = self._key_owner(env.key_id)
        if key is None:
            return
        be = self.station.backend
        try:
            plain = P.unseal(be, key, env)
        except IntegrityFailure:
            self.verdict(t, "p4", "reject", "IntegrityFailure", navaid=navaid, **self._origin(provenance, navaid))
            return
        inner = plain[0] if plain else None
        if inner == RANGEREPORT:
            self._daisy_report(t, env, key, navaid)
            return
        try:
            resp = decode_as(plain, Respond)
        except MalformedMessage:
            self.verdict(t, "p4", "reject", "IntegrityFailure", navaid=navaid, **self._origin(provenance, navaid))
            return
        tracked = next((s for s in self.sessions if s.protocol == "p4" and s.session.r_c == resp.r_c
                        and s.session.key is key), None)
        if tracked is None or tracked.session.state is not P.SessionState.SENT:
            self.verdict(t, "p4", "reject", "NonceMismatch", navaid=navaid, **self._origin(provenance, navaid))
            return
        pd = self.sim.certified_delay(self.directory, navaid)
        try:
            P.p4_complete(tracked.session, env, self.local(t), pd, be, self.sim.params.session_timeout_ns)
        except P.ProtocolReject as e:
            self.verdict(t, "p4", "reject", e.reason, navaid=navaid, **self._origin(provenance, navaid))
            return
        except IntegrityFailure:
            self.verdict(t, "p4", "reject", "IntegrityFailure", navaid=navaid, **self._origin(provenance, navaid))
            return
        self.sim.range_record(self, t, tracked, provenance)
        if tracked.daisy:
            self._daisy_continue(t, tracked, key, navaid)

    def _daisy_continue(self, t, tracked, key, peer):
        s = tracked.session
        echo = Respond(s.r_n, s.r_c)
        self.sim.transmit(self.name, t + self.spec.processing_delay_ns,
                          P.seal(self.station.backend, key, echo.encode()).encode())
        own = P.sign_range_report(self.station, s.range_m, t)
        self.daisy.setdefault(peer, {})["own"] = own
        self.sim.transmit(self.name, t + self.sim.params.sign_latency_ns,
                          P.seal(self.station.backend, key, own.encode()).encode())
        self.sim.daisy_combine(self, t, peer, self.daisy[peer])

    def _daisy_report(self, t, env, key, peer):
        try:
            pub = self.directory.lookup(NodeId.from_name(peer), t)
            rep = P.open_range_report(env, key, pub, self.station.backend)
        except (NoTrustPath, P.BadSignature, IntegrityFailure):
            self.verdict(t, "daisy", "reject", "BadSignature", peer=peer)
            return
        self.daisy.setdefault(peer, {})["peer"] = rep
        self.sim.daisy_combine(self, t + self.sim.params.verify_latency_ns, peer, self.daisy[peer])

    def _on_respond(self, t, data, provenance):
        try:
            resp = decode_as(data, Respond)
        except MalformedMessage:
            return
        tracked = next((s for s in self.sessions if s.protocol == "p5" and s.session.r_c == resp.r_c), None)
        if tracked is None:
            return
        pd = self.sim.certified_delay(self.directory, tracked.navaid)
        first = tracked.session.state is P.SessionState.SENT
        try:
            P.p5_complete(tracked.session, resp, self.local(t), pd, self.sim.params.session_timeout_ns)
        except P.ProtocolReject as e:
            self.verdict(t, "p5", "reject", e.reason, navaid=tracked.navaid, provenance=list(provenance))
            return
        tracked.responders.append((resp.r_n, list(provenance), t))
        if first:
            self.sim.range_record(self, t, tracked, provenance)
            self.sim.transmit(self.name, t, AuthRequest(resp.r_c, self.station.id).encode())

    def _on_auth(self, t, data, provenance):
        try:
            env = decode_as(data, PkEnvelope)
        except MalformedMessage:
            return
        if env.recipient != self.station.keys.public.key_id:
            return
        be = self.station.backend
        available = t + self.sim.params.pk_decrypt_latency_ns + self.sim.params.verify_latency_ns
        try:
            auth = P.p5_open_auth(env, self.station.keys.private, be)
        except (IntegrityFailure, P.ProtocolReject):
            self.verdict(t, "p5", "reject", "IntegrityFailure", provenance=list(provenance))
            return
        tracked = next((s for s in self.sessions if s.session.r_c == auth.r_c), None)
        if tracked is None:
            self.verdict(t, "p5", "reject", "NonceMismatch", **self._origin(provenance, auth.i.name))
            return
        try:
            ar = P.p5_accept_auth(tracked.session, auth, self.directory, t, be)
        except P.ProtocolReject as e:
            self.verdict(t, "p5", "reject", e.reason, navaid=auth.i.name, **self._origin(provenance, auth.i.name))
            return
        self.sim.auth_record(self, t, available, tracked, ar, provenance)

    # -- fixes --------------------------------------------------------------
    def _fix(self, t):
        beacons, samples = self.beacons, self.samples
        self.beacons, self.samples = [], []
        if "p1" in self.spec.protocols and beacons:
            self._bearing_fix(t, beacons)
        if "p2" in self.spec.protocols and beacons:
            self._position_fix(t, "p2", P.p2_collect(beacons, self.q), beacons)
        if "p3" in self.spec.protocols and samples:
            self._position_fix(t, "p3", P.timing_samples_to_set(samples, self.q), samples)
        if "combined" in self.spec.protocols and (beacons or samples):
            self._position_fix(t, "combined", P.combine_p1_p2(beacons + samples, self.q), beacons + samples)

    def _bearing_fix(self, t, beacons):
        truth = self.station.trajectory.at(t)
        try:
            bf = P.p1_bearing_fix(beacons)
        except P.DegenerateGeometry as e:
            self.sim.record(t, "bearing_fix", node=self.name, protocol="p1", verdict="UNDERDETERMINED",
                            reason=e.reason, navaids=sorted({o.navaid.name for o in beacons}))
            return
        self.sim.record(t, "bearing_fix", node=self.name, protocol="p1", verdict="CLEAN",
                        position=list(bf.position), residual_m=bf.residual_m, navaids=_ids(bf.navaids),
                        true_position=list(truth), error_m=distance(bf.position, truth))

    def _position_fix(self, t, protocol, prs, observations):
        truth = self.station.trajectory.at(t)
        prov = {}
        for o in observations:
            prov.setdefault(o.navaid.name, set()).update(o.provenance[1:])
        used = [e.navaid.name for e in prs]
        relayed = {n: sorted(prov.get(n, ())) for n in used if prov.get(n)}
        rec = {"node": self.name, "protocol": protocol, "navaids": used, "duplicates": _ids(sorted(prs.duplicates))}
        rec["true_position"] = list(truth)
        rec["relayed_by"] = relayed
        if len(prs) >= 2:
            viol = pairwise_timestamp_check(prs)
            rec["pairwise"] = [[a.name, b.name, round(x, 3)] for a, b, x in viol]
            rec["pairwise_verdict"] = (Verdict.MEACONING_SUSPECTED if viol else Verdict.CLEAN).value
        if len(prs) >= 1:
            rec["time_lower_bound"] = time_lower_bound(prs)
        try:
            fix = solve_fix(prs, detection_ratio=self.sim.params.detection_ratio,
                            residual_threshold=self.sim.params.residual_threshold_m,
                            max_clock_bias_ns=self.sim.params.client_clock_bound_ns)
        except (SingularGeometry, NoConvergence) as e:
            rec.update(verdict=Verdict.UNDERDETERMINED.value, reason=type(e).__name__, position=None, error_m=None)
            self.sim.record(t, "fix", **rec)
            return
        rec.update(fix.to_json())
        rec["error_m"] = None if fix.position is None else distance(fix.position, truth)
        rec["known_impossible"] = bool(
            fix.verdict is Verdict.CLEAN and used and len(relayed) == len(used)
            and not rec.get("pairwise"))
        self.sim.record(t, "fix", **rec)


@dataclass
class Tracked:
    """A client-side ranging session plus the bookkeeping the trace needs."""

    session: P.RangingSession
    protocol: str
    navaid: str
    started: int
    spec: object = None
    daisy: bool = False
    responders: list = field(default_factory=list)


@dataclass
class AttackerNode(Node):
    LISTENS: frozenset = frozenset({BEACON, COMMIT, REVEAL, INTERROGATE, RESPOND, AUTHREQ, RANGEREPORT,
                                    SYM_ENVELOPE, PK_ENVELOPE})
    capabilities: list = field(default_factory=list)
    forger: Forger = None
    replays_done: dict = field(default_factory=lambda: defaultdict(int))
    spoofs_done: dict = field(default_factory=lambda: defaultdict(int))

    def path_capabilities(self):
        return [c for c in self.capabilities if isinstance(c, (DelayMeacon, BentPipe))]

    def on_timer(self, t, payload):
        kind = payload[0]
        if kind == "spoof":
            idx = payload[1]
            cap = self.capabilities[idx]
            for msg in attacker_spoof(self.forger, cap, t, None, self.sim.params.p3_lead_ns):
                self.sim.transmit(self.name, t, msg.encode(), targets=self.sim.targets(cap.victims))
            if cap.message == "commit" and self.forger.open_commits:
                reveal = self.forger.open_commits.pop()
                when = self.station.clock.true_time_for(reveal.t2)
                self.sim.timer(when, self.name, ("spoof_send", reveal.encode(), idx))
        elif kind == "spoof_send":
            _, data, idx = payload
            self.sim.transmit(self.name, t, data, targets=self.sim.targets(self.capabilities[idx].victims))

    def on_receive(self, t, data, provenance, emitter):
        if len(provenance) != 1 or provenance[0] == self.name:
            return
        try:
            msg = decode(data)
        except MalformedMessage:
            return
        if isinstance(msg, Interrogate):
            self.forger.note_interrogation(msg)
        src = provenance[0]
        for idx, cap in enumerate(self.capabilities):
            if isinstance(cap, Replay) and cap.wants(src, _wire_name(msg)):
                if cap.max_replays is not None and self.replays_done[idx] >= cap.max_replays:
                    continue
                self.replays_done[idx] += 1
                em = attacker_replay(self.name, cap, t, self.station.trajectory.at(t), data, provenance,
                                     self.sim.targets(cap.victims))
                self.sim.record(t, "replay", level="event", node=self.name, source=src,
                                at=math.ceil(em.time_ns))
                self.sim.transmit(self.name, math.ceil(em.time_ns), data, provenance=em.provenance,
                                  targets=em.targets)
            elif isinstance(cap, Spoof) and not cap.timed:
                if self.spoofs_done[idx] >= cap.count:
                    continue
                if isinstance(msg, SymEnvelope) and not _is_interrogation_from(src, self.sim):
                    continue
                out = attacker_spoof(self.forger, cap, t, msg, self.sim.params.p3_lead_ns)
                if out:
                    self.spoofs_done[idx] += 1
                for m in out:
                    self.sim.transmit(self.name, t, m.encode(), targets=self.sim.targets(cap.victims))


_WIRE_NAMES = {SymEnvelope: "SYM_ENVELOPE", PkEnvelope: "PK_ENVELOPE", AuthRequest: "AUTHREQ"}


def _wire_name(msg) -> str:
    return _WIRE_NAMES.get(type(msg), type(msg).__name__.upper())


def _is_interrogation_from(src: str, sim) -> bool:
    # envelopes sent by clients are interrogations (or daisy traffic); navaid envelopes are answers
    return sim.roles.get(src) == "client"
