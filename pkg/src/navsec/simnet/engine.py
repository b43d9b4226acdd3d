from __future__ import annotations

import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .. import protocols as P
from ..certs import (AssertionKind, CryptoSecurityType, KeyDirectory, PhysicalSecurityLevel, PlatformType,
                     TrustPolicy, antenna_assertion, cert_issue, key_delegation, level_assertion,
                     position_assertion, processing_delay_assertion, processing_delay_of)
from ..core import (C, NS_PER_S, AntennaSchedule, ClockModel, Direction, NodeId, Position, PositionFunction,
                    distance)
from ..crypto import make_backend
from ..scenario import Scenario, ScenarioInvalid
from ..solver import Verdict
from ..wire import BEACON
from .attackers import BentPipe, DelayMeacon, Forger, KeyCompromise, Spoof, attacker_bent_pipe, \
    attacker_delay_meacon, capability_from_dict
from .channel import Channel, arrival_time, position_at
from .events import EventKind, EventQueue
from .nodes import AttackerNode, ClientNode, NavaidNode

TRACE_SCHEMA = "navsec.trace/1"
LOG_LEVELS = ("verdicts", "events", "debug")
M_PER_NS = C / NS_PER_S
_CERT_MARGIN_NS = 3600 * NS_PER_S


def _ceil_ns(t: float) -> int:
    # tolerate float noise on exact integers, then never round a delivery earlier
    return math.ceil(t - 1e-6)


def _vec_norm(v: Position) -> float:
    return float(np.linalg.norm(v.as_array()))


@dataclass
class Trace:
    """Ordered trace records plus a closing summary.

    Records carry a ``level``: ``event`` records describe radio traffic,
    everything else is a protocol outcome.
    """

    header: dict
    records: list
    summary: dict

    def lines(self, level: str = "events") -> list[str]:
        if level not in LOG_LEVELS:
            raise ValueError(f"log level must be one of {LOG_LEVELS}")
        out = [_dump(self.header)]
        for i, rec in enumerate(self.records):
            if rec["level"] == "event" and level == "verdicts":
                continue
            shown = {k: v for k, v in rec.items() if k != "level" and (level == "debug" or k != "data")}
            shown["seq"] = i
            out.append(_dump(shown))
        out.append(_dump(self.summary))
        return out

    def to_jsonl(self, level: str | None = None) -> str:
        level = level or os.environ.get("NAVSEC_LOG", "events")
        return "\n".join(self.lines(level)) + "\n"

    def of_kind(self, kind: str, **where) -> list[dict]:
        return [r for r in self.records
                if r["kind"] == kind and all(r.get(k) == v for k, v in where.items())]

    @property
    def ok(self) -> bool:
        return self.summary["ok"]


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


class Simulator:
    def __init__(self, scenario: Scenario, seed: int | None = None):
        self.sc = scenario
        self.seed = scenario.seed if seed is None else seed
        self.params = scenario.params
        self.clock_tolerance = scenario.clock_tolerance_ns
        self.range_tolerance = scenario.range_tolerance_m
        self.backend = make_backend(scenario.backend, self.seed)
        self.channel = Channel.from_config(scenario.channels, self.seed)
        self.queue = EventQueue()
        self.records: list[dict] = []
        self.nodes: dict = {}
        self.order: list[str] = [n.id for n in scenario.nodes]
        self.roles = {n.id: n.role for n in scenario.nodes}
        self.compromised: dict[str, set] = {}
        self._setup()

    # -- setup ----------------------------------------------------------------
    def _station(self, spec, keys) -> P.Station:
        traj = PositionFunction(Position.of(spec.position), Position.of(spec.velocity), 0)
        clock = ClockModel(spec.clock["bias_ns"], spec.clock["drift"], spec.clock["quantization_ns"])
        antenna = None
        if spec.antenna is not None:
            a = spec.antenna
            antenna = AntennaSchedule(Direction.normalized(a["azimuth"], a["elevation"]), a["rate_rad_s"], 0)
        return P.Station(NodeId.from_name(spec.id), keys, clock, traj, self.backend, antenna,
                         spec.processing_delay_ns)

    def _setup(self) -> None:
        be = self.backend
        root = be.generate_keypair()
        policy = TrustPolicy.create([root.public])
        window = (0, self.sc.duration_ns + _CERT_MARGIN_NS)
        stations, chains = {}, {}
        for spec in self.sc.nodes:
            keys = be.generate_keypair()
            st = self._station(spec, keys)
            stations[spec.id] = st
            if spec.role == "attacker":
                continue
            assertions = [key_delegation(keys.public), position_assertion(st.trajectory),
                          processing_delay_assertion(spec.processing_delay_ns),
                          level_assertion(AssertionKind.CRYPTO_SECURITY_TYPE, CryptoSecurityType.TAMPER_RESISTANT),
                          level_assertion(AssertionKind.PHYSICAL_SECURITY_LEVEL,
                                          PhysicalSecurityLevel.SUPERVISED if spec.role == "navaid"
                                          else PhysicalSecurityLevel.SEALED),
                          level_assertion(AssertionKind.PLATFORM_TYPE,
                                          PlatformType.AIRBORNE if _vec_norm(Position.of(spec.velocity)) > 0
                                          else PlatformType.SURFACE)]
            if st.antenna is not None:
                assertions.append(antenna_assertion(st.antenna))
            chains[st.id] = [cert_issue(root.private, st.id, assertions, window, be)]

        def directory():
            return KeyDirectory(policy, {k: list(v) for k, v in chains.items()}, be)

        for spec in self.sc.nodes:
            st = stations[spec.id]
            if spec.role == "navaid":
                node = NavaidNode(spec.id, spec, st, directory(), self,
                                  nonce_cache=P.NonceCache(self.sc.nonce_expiry_ns))
            elif spec.role == "client":
                node = ClientNode(spec.id, spec, st, directory(), self)
            else:
                caps = [capability_from_dict(c) for c in spec.capabilities]
                node = AttackerNode(spec.id, spec, st, directory(), self, capabilities=caps,
                                    forger=Forger(st, directory()))
            self.nodes[spec.id] = node

        # Protocol 4 keys are agreed before the run over an authenticated exchange
        for spec in self.sc.by_role("client"):
            client = self.nodes[spec.id]
            peers = sorted({r.navaid for r in spec.ranging if r.protocol == "p4"} | {d.peer for d in spec.daisy})
            for peer in peers:
                nav = self.nodes[peer]
                key, offer = P.p4_key_offer(client.station, nav.station.id, nav.station.keys.public, 0)
                nav_key, cid, ack = P.p4_key_accept(nav.station, offer, nav.directory, 0)
                P.p4_key_confirm(key, ack, client.station.id, nav.station.id, nav.station.keys.public, be)
                client.sym_keys[peer] = key
                nav.sym_keys[spec.id] = nav_key
                self.record(0, "key_agreement", node=spec.id, peer=peer, key_id=key.key_id.hex())

        for spec in self.sc.by_role("attacker"):
            att = self.nodes[spec.id]
            for cap in att.capabilities:
                if isinstance(cap, KeyCompromise):
                    victim = self.nodes[cap.node]
                    att.forger.stolen[cap.node] = victim.station.keys
                    for key in getattr(victim, "sym_keys", {}).values():
                        att.forger.stolen_sym[key.key_id] = key
                    self.compromised.setdefault(spec.id, set()).add(cap.node)
        self._schedule()

    def _schedule(self) -> None:
        dur = self.sc.duration_ns
        period = self.params.beacon_period_ns
        for spec in self.sc.nodes:
            if spec.role == "navaid":
                for t in range(spec.start_ns, dur + 1, period):
                    if {"p1", "p2"} & set(spec.protocols):
                        self.timer(t, spec.id, ("beacon",))
                    if "p3" in spec.protocols:
                        self.timer(t, spec.id, ("commit",))
            elif spec.role == "client":
                if {"p1", "p2", "p3", "combined"} & set(spec.protocols):
                    every = spec.fix_every_ns or period
                    for t in range(every - 1, dur + 1, every):
                        self.timer(t, spec.id, ("fix",))
                for r in spec.ranging:
                    self.timer(r.at_ns, spec.id, ("range", r))
                for d in spec.daisy:
                    self.timer(d.at_ns, spec.id, ("daisy", d))
            else:
                for idx, cap in enumerate(self.nodes[spec.id].capabilities):
                    if isinstance(cap, Spoof) and cap.timed:
                        for j in range(cap.count):
                            t = cap.start_ns + j * cap.period_ns
                            if t <= dur:
                                self.timer(t, spec.id, ("spoof", idx))

    # -- primitives used by nodes ----------------------------------------------
    def record(self, t: int, kind: str, level: str = "verdict", **fields) -> None:
        rec = {"t": int(t), "kind": kind, "level": level}
        rec.update(fields)
        self.records.append(rec)

    def timer(self, t: int, node: str, payload) -> None:
        self.queue.push(t, EventKind.TIMER, node, payload)

    def transmit(self, node: str, t: int, data: bytes, provenance: tuple | None = None,
                 targets: frozenset | None = None) -> None:
        prov = (node,) if provenance is None else tuple(provenance)
        self.queue.push(t, EventKind.TRANSMIT, node, (data, targets), prov)

    def targets(self, victims) -> frozenset | None:
        return None if victims == "*" else frozenset(victims)

    def certified_delay(self, directory: KeyDirectory, name: str) -> int:
        return processing_delay_of(directory.leaf(NodeId.from_name(name)))

    def true_range(self, a: str, b: str, t: float) -> float:
        return distance(position_at(self.nodes[a].station.trajectory, t),
                        position_at(self.nodes[b].station.trajectory, t))

    def _relative_speed(self, a: str, b: str) -> float:
        va = self.nodes[a].station.trajectory.velocity.as_array()
        vb = self.nodes[b].station.trajectory.velocity.as_array()
        return float(np.linalg.norm(va - vb))

    # -- the loop --------------------------------------------------------------
    def run(self) -> Trace:
        while self.queue:
            ev = self.queue.pop()
            if ev.fire_time > self.sc.duration_ns:
                break
            node = self.nodes[ev.node]
            if ev.kind is EventKind.TIMER:
                node.on_timer(ev.fire_time, ev.payload)
            elif ev.kind is EventKind.TRANSMIT:
                data, targets = ev.payload
                self._broadcast(ev, data, targets)
            else:
                data, emitter, sender = ev.payload
                self.record(ev.fire_time, "deliver", level="event", node=ev.node, sender=sender,
                            msg=data[0], provenance=list(ev.provenance))
                node.on_receive(ev.fire_time, data, ev.provenance, emitter)
        return self._finish()

    def _beam_ok(self, sender: str, msg_type: int, point: Position, t: float) -> bool:
        spec = self.sc.node(sender)
        if msg_type != BEACON or spec.antenna is None or spec.antenna.get("beamwidth_rad") is None:
            return True
        st = self.nodes[sender].station
        v = (point - st.trajectory.at(int(t))).as_array()
        n = float(np.linalg.norm(v))
        if n == 0:
            return True
        u = st.antenna.at(int(t)).unit_vector()
        return math.acos(max(-1.0, min(1.0, float(u @ v) / n))) <= spec.antenna["beamwidth_rad"] / 2

    def _interceptor(self, src: str, dst: str, t: float):
        if self.channel.transmission_security:
            return None, None
        for name in self.order:
            if self.roles[name] != "attacker" or name in (src, dst):
                continue
            for cap in self.nodes[name].path_capabilities():
                if cap.intercepts(src, dst, t):
                    return self.nodes[name], cap
        return None, None

    def _broadcast(self, ev, data: bytes, targets) -> None:
        sender = ev.node
        t_emit = ev.fire_time
        here = self.nodes[sender].station.trajectory.at(t_emit)
        fields = {"node": sender, "msg": data[0], "len": len(data), "provenance": list(ev.provenance)}
        fields["data"] = data.hex()
        self.record(t_emit, "transmit", level="event", **fields)
        honest_origin = self.roles[sender] != "attacker"
        if not honest_origin and self.channel.transmission_security:
            # spread-spectrum links: without the code an attacker can neither read nor write
            return
        for name in self.order:
            if name == sender:
                continue
            rx = self.nodes[name]
            if not rx.listens(data[0]) or (targets is not None and name not in targets):
                continue
            if rx.role == "attacker" and self.channel.transmission_security:
                continue
            if honest_origin and rx.role != "attacker":
                att, cap = self._interceptor(sender, name, t_emit)
                if cap is not None:
                    self._relay(att, cap, sender, name, t_emit, here, data, ev.provenance)
                    if cap.overpower:
                        continue
            self._leg(sender, name, t_emit, here, data, ev.provenance)

    def _leg(self, sender: str, receiver: str, t_emit: float, emitter: Position, data: bytes,
             provenance: tuple) -> None:
        if not self.channel.reachable(sender, receiver):
            return
        rx = self.nodes[receiver]
        t_d = arrival_time(t_emit, emitter, rx.station.trajectory)
        if not self._beam_ok(provenance[0] if len(provenance) == 1 else sender, data[0],
                             position_at(rx.station.trajectory, t_d), t_emit):
            return
        at = _ceil_ns(t_d)
        if self.channel.lost(sender, receiver, at):
            self.record(at, "drop", level="event", node=receiver, sender=sender, reason="channel loss",
                        provenance=list(provenance))
            return
        self.queue.push(at, EventKind.DELIVER, receiver, (data, emitter, sender), provenance)

    def _relay(self, att, cap, sender, receiver, t_emit, emitter, data, provenance) -> None:
        if isinstance(cap, BentPipe):
            rx_fn = PositionFunction(cap.rx_position)
        else:
            rx_fn = att.station.trajectory
        if not self.channel.reachable(sender, att.name):
            return
        heard = arrival_time(t_emit, emitter, rx_fn)
        if not self._beam_ok(sender, data[0], position_at(rx_fn, heard), t_emit):
            return
        tx_pos = position_at(att.station.trajectory, heard + cap.delay_ns)
        if isinstance(cap, BentPipe):
            em = attacker_bent_pipe(att.name, cap, heard, tx_pos, data, provenance)
        else:
            em = attacker_delay_meacon(att.name, cap, heard, tx_pos, data, provenance)
        self.record(_ceil_ns(em.time_ns), "relay", level="event", node=att.name, sender=sender,
                    victim=receiver, capability=type(cap).__name__, provenance=list(em.provenance))
        self._leg(att.name, receiver, em.time_ns, em.position, data, em.provenance)

    # -- outcome records (called by nodes) -------------------------------------
    def range_record(self, client, t: int, tracked, provenance: tuple) -> None:
        s = tracked.session
        navaid = tracked.navaid
        started = tracked.started
        true_r = self.true_range(client.name, navaid, started)
        duration = t - started
        v_rel = self._relative_speed(client.name, navaid)
        slack = M_PER_NS * client.station.clock.quantization + v_rel * duration / NS_PER_S
        self.record(t, "range", node=client.name, protocol=tracked.protocol, navaid=navaid, state=s.state.value,
                    range_m=s.range_m, true_range_m=true_r, duration_ns=duration, relative_speed_mps=v_rel,
                    slack_m=slack, bound_ok=bool(s.range_m >= true_r - slack), daisy=tracked.daisy,
                    origin=provenance[0], provenance=list(provenance), relayed=len(provenance) > 1)

    def auth_record(self, client, t: int, available: int, tracked, ar, provenance: tuple) -> None:
        navaid = ar.navaid.name
        responder = next((r for r in tracked.responders if r[0] == ar.r_n), None)
        rx_true = responder[2] if responder else t
        resp_prov = responder[1] if responder else []
        true_at_rx = self.true_range(client.name, navaid, rx_true)
        true_at_avail = self.true_range(client.name, navaid, available)
        forged = provenance[0] != navaid or (bool(resp_prov) and resp_prov[0] != navaid)
        self.record(t, "auth_range", node=client.name, protocol=tracked.protocol, navaid=navaid,
                    state=tracked.session.state.value, range_m=ar.range_m, true_range_m=true_at_rx,
                    available_at=available, staleness_ns=available - rx_true,
                    true_range_at_available_m=true_at_avail, uncertainty_m=abs(ar.range_m - true_at_avail),
                    origin=provenance[0], response_provenance=resp_prov, provenance=list(provenance),
                    claimed=navaid, forged=forged)
        if tracked.spec is not None and tracked.spec.direction_report:
            cp = P.constraints_from_range(ar)
            pos = cp.intersect()
            truth = position_at(client.station.trajectory, tracked.started)
            self.record(t, "timing_angle", node=client.name, navaid=navaid, range_m=cp.radius_m,
                        azimuth=cp.bearing.azimuth, elevation=cp.bearing.elevation, position=list(pos),
                        true_position=list(truth), error_m=distance(pos, truth))

    def daisy_combine(self, node, t: int, peer: str, state: dict) -> None:
        if "own" not in state or "peer" not in state or state.get("done"):
            return
        state["done"] = True
        res = P.combine_daisy_chain(state["own"], state["peer"], self.params.v_max_mps, self.range_tolerance)
        self.record(t, "daisy", node=node.name, peer=peer, verdict=res.verdict.value, range_a=res.range_a,
                    range_b=res.range_b, delta_m=res.delta_m, bound_m=res.bound_m, elapsed_ns=res.elapsed_ns,
                    pair=sorted([node.name, peer]))

    # -- summary --------------------------------------------------------------
    def _finish(self) -> Trace:
        header = {"kind": "header", "schema": TRACE_SCHEMA, "seed": self.seed, "scenario": self.sc.to_dict(),
                  "resolved": {"clock_tolerance_ns": self.clock_tolerance,
                               "range_tolerance_m": self.range_tolerance,
                               "nonce_expiry_ns": self.sc.nonce_expiry_ns}}
        summary = summarize(self.records, self.sc, self.compromised)
        summary["ops"] = dict(sorted(self.backend.op_counts.items()))
        return Trace(header, self.records, summary)


def _touched_by(rec: dict, attacker: str) -> bool:
    if attacker in rec.get("provenance", [])[1:] or rec.get("origin") == attacker:
        return True
    if any(attacker in v for v in rec.get("relayed_by", {}).values()):
        return True
    return attacker in rec.get("response_provenance", [])


def _detected(rec: dict) -> bool:
    k = rec["kind"]
    if k == "fix":
        return rec.get("verdict") not in (Verdict.CLEAN.value,) or bool(rec.get("pairwise"))
    if k == "daisy":
        return rec["verdict"] != Verdict.CLEAN.value
    if k == "verdict":
        return rec["result"] == "reject"
    return False


def _undetected_harm(rec: dict, threshold: float) -> bool:
    k = rec["kind"]
    if k == "fix":
        err = rec.get("error_m")
        return (rec.get("verdict") == Verdict.CLEAN.value and not rec.get("pairwise")
                and err is not None and err > threshold)
    if k == "verdict":
        return rec["result"] == "accept" and rec.get("forged", False)
    if k == "range":
        return rec.get("protocol") == "p4" and not rec.get("bound_ok", True)
    if k == "auth_range":
        return rec.get("forged", False)
    return False


def _degraded(rec: dict) -> bool:
    k = rec["kind"]
    if k in ("range", "auth_range") and rec.get("range_m") is not None:
        return rec["range_m"] - rec["true_range_m"] > rec.get("slack_m", 0.0) + 1.0
    if k == "range" and rec.get("reason") == "Timeout":
        return True
    return False


def summarize(records: list, sc: Scenario, compromised: dict) -> dict:
    counts = Counter()
    for r in records:
        if r["level"] == "event":
            continue
        key = r["kind"]
        if r["kind"] == "verdict":
            key = f"verdict/{r['protocol']}/{r['result']}" + (f"/{r['reason']}" if r.get("reason") else "")
        elif "verdict" in r:
            key = f"{r['kind']}/{r['verdict']}"
        counts[key] += 1
    fixes = {}
    for r in records:
        if r["kind"] in ("fix", "bearing_fix"):
            fixes[f"{r['node']}/{r['protocol']}"] = {k: r.get(k) for k in (
                "t", "verdict", "accused", "delay_ns", "clock_bias_ns", "position", "error_m", "ambiguous",
                "known_impossible", "pairwise_verdict") if k in r}
    forged = []
    for r in records:
        if r["kind"] in ("verdict", "auth_range") and r.get("forged") and r.get("result", "accept") == "accept":
            origin = r.get("origin")
            chain = set(r.get("provenance", [])) | set(r.get("response_provenance", []))
            granted = any(r.get("claimed") in compromised.get(a, ()) for a in chain)
            forged.append({"t": r["t"], "node": r["node"], "kind": r["kind"], "claimed": r.get("claimed"),
                           "origin": origin, "key_compromised": granted})
    threshold = sc.params.residual_threshold_m
    attacks = []
    for spec in sc.by_role("attacker"):
        for cap in spec.capabilities:
            touched = [r for r in records if r["level"] != "event" and _touched_by(r, spec.id)]
            relays = sum(1 for r in records if r["kind"] in ("relay", "replay") and r["node"] == spec.id)
            detected = sum(1 for r in touched if _detected(r))
            harmed = sum(1 for r in touched if _undetected_harm(r, threshold))
            degraded = sum(1 for r in touched if _degraded(r))
            # daisy verdicts carry no provenance: the attacker touched them if it relayed any daisy leg
            if cap["type"] in ("delay_meacon", "bent_pipe") and relays:
                for r in records:
                    if r["kind"] == "daisy" and r["verdict"] != Verdict.CLEAN.value:
                        detected += 1
            if harmed:
                outcome = "succeeded"
            elif detected:
                outcome = "detected"
            elif degraded:
                outcome = "degraded"
            elif touched or relays:
                outcome = "no effect"
            else:
                outcome = "inactive"
            attacks.append({"attacker": spec.id, "capability": cap["type"], "records": len(touched),
                            "relays": relays, "detected": detected, "undetected_harm": harmed, "degraded": degraded,
                            "outcome": outcome})
    known_impossible = any(r.get("known_impossible") for r in records if r["kind"] == "fix")
    expectations = [check_expectation(e, records) for e in sc.expect]
    return {"kind": "summary", "counts": dict(sorted(counts.items())), "fixes": dict(sorted(fixes.items())),
            "forged_accepts": forged, "attacks": attacks, "known_impossible": known_impossible,
            "expectations": expectations, "ok": all(e["ok"] for e in expectations)}


def _get(rec: dict, path: str):
    cur = rec
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return None
        cur = cur[part]
    return cur


def check_expectation(e: dict, records: list) -> dict:
    """Evaluate one ``expect`` entry against outcome records.

    ``where`` selects records of ``kind``; ``count`` bounds how many match;
    ``every`` requires equal fields, ``max``/``min`` numeric bounds, on each match.
    """
    where = e.get("where", {})
    matched = [r for r in records if r["kind"] == e["kind"] and all(_get(r, k) == v for k, v in where.items())]
    problems = []
    count = e.get("count", {"min": 1})
    if "min" in count and len(matched) < count["min"]:
        problems.append(f"{len(matched)} matching records < {count['min']}")
    if "max" in count and len(matched) > count["max"]:
        problems.append(f"{len(matched)} matching records > {count['max']}")
    for r in matched:
        for k, v in e.get("every", {}).items():
            if _get(r, k) != v:
                problems.append(f"t={r['t']}: {k}={_get(r, k)!r}, expected {v!r}")
        for k, v in e.get("max", {}).items():
            got = _get(r, k)
            if got is None or got > v:
                problems.append(f"t={r['t']}: {k}={got!r} > {v}")
        for k, v in e.get("min", {}).items():
            got = _get(r, k)
            if got is None or got < v:
                problems.append(f"t={r['t']}: {k}={got!r} < {v}")
    return {"expect": e, "matched": len(matched), "ok": not problems, "problems": problems[:5]}


def run(scenario: Scenario | dict, seed: int | None = None) -> Trace:
    """Simulate a scenario; identical (scenario, seed) give identical traces."""
    if not isinstance(scenario, Scenario):
        scenario = Scenario.from_dict(scenario)
    return Simulator(scenario, seed).run()


__all__ = ["Trace", "Simulator", "run", "ScenarioInvalid", "summarize", "check_expectation", "TRACE_SCHEMA"]
