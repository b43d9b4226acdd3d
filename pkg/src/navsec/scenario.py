"""Scenario files: versioned JSON describing nodes, channels, attacks and expectations.

``Scenario.from_dict`` validates and fills defaults; ``to_dict`` emits the
fully resolved form, which loads back into an identical scenario.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .core import C, NS_PER_S

SCHEMA = "navsec.scenario/1"

ROLES = ("navaid", "client", "attacker")
NAVAID_PROTOCOLS = ("p1", "p2", "p3", "p4", "p5")
CLIENT_PROTOCOLS = ("p1", "p2", "p3", "combined")
CAPABILITIES = ("delay_meacon", "bent_pipe", "replay", "spoof", "key_compromise")
SPOOF_KINDS = ("beacon", "commit", "reveal", "p4_response", "p5_response", "auth")
MESSAGE_NAMES = ("BEACON", "COMMIT", "REVEAL", "INTERROGATE", "RESPOND", "AUTH", "RANGEREPORT",
                 "CERT", "AUTHREQ", "SYM_ENVELOPE", "PK_ENVELOPE")


class ScenarioInvalid(ValueError):
    def __init__(self, reasons):
        self.reasons = list(reasons)
        super().__init__("; ".join(self.reasons))


@dataclass
class Params:
    freshness_window_ns: int = 5_000_000
    clock_tolerance_ns: int | None = None
    detection_ratio: float = 10.0
    residual_threshold_m: float = 3.0
    sign_latency_ns: int = 2_000_000
    verify_latency_ns: int = 1_000_000
    sym_latency_ns: int = 10_000
    pk_encrypt_latency_ns: int = 1_000_000
    pk_decrypt_latency_ns: int = 2_000_000
    beacon_period_ns: int = 5_000_000
    p3_lead_ns: int = 2_000_000
    session_timeout_ns: int = 10_000_000
    max_clock_bias_ns: int = 0
    v_max_mps: float = 1000.0
    range_tolerance_m: float | None = None
    nonce_expiry_ns: int | None = None
    # how far clients trust their own clocks when fixing; None means not at all
    client_clock_bound_ns: int | None = None


@dataclass
class RangingSpec:
    protocol: str
    navaid: str
    at_ns: int
    direction_report: bool = False


@dataclass
class DaisySpec:
    peer: str
    at_ns: int


@dataclass
class NodeSpec:
    id: str
    role: str
    position: list
    velocity: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    clock: dict = field(default_factory=lambda: {"bias_ns": 0, "drift": 0.0, "quantization_ns": 1})
    antenna: dict | None = None
    processing_delay_ns: int = 1000
    protocols: list = field(default_factory=list)
    measures_direction: bool = False
    start_ns: int = 0
    fix_every_ns: int | None = None
    ranging: list = field(default_factory=list)
    daisy: list = field(default_factory=list)
    capabilities: list = field(default_factory=list)


@dataclass
class Scenario:
    name: str
    nodes: list
    duration_ns: int = 20_000_000
    seed: int = 0
    backend: str = "test"
    description: str = ""
    params: Params = field(default_factory=Params)
    channels: dict = field(default_factory=lambda: {"blocked": [], "loss": [], "transmission_security": False})
    expect: list = field(default_factory=list)
    schema: str = SCHEMA

    # -- derived -------------------------------------------------------------
    def node(self, id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == id:
                return n
        raise KeyError(id)

    def by_role(self, role: str) -> list:
        return [n for n in self.nodes if n.role == role]

    @property
    def clock_tolerance_ns(self) -> int:
        if self.params.clock_tolerance_ns is not None:
            return self.params.clock_tolerance_ns
        q = max((n.clock["quantization_ns"] for n in self.nodes), default=1)
        return 2 * q + self.params.max_clock_bias_ns

    @property
    def range_tolerance_m(self) -> float:
        if self.params.range_tolerance_m is not None:
            return self.params.range_tolerance_m
        q = max((n.clock["quantization_ns"] for n in self.nodes), default=1)
        return C * q / NS_PER_S

    @property
    def nonce_expiry_ns(self) -> int:
        if self.params.nonce_expiry_ns is not None:
            return self.params.nonce_expiry_ns
        return 2 * self.params.freshness_window_ns

    # -- (de)serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, raw: Any) -> "Scenario":
        errors: list[str] = []
        if not isinstance(raw, dict):
            raise ScenarioInvalid(["scenario must be a JSON object"])
        raw = copy.deepcopy(raw)
        schema = raw.get("schema", SCHEMA)
        if schema != SCHEMA:
            errors.append(f"unsupported schema {schema!r}")
        known = {f.name for f in fields(cls)}
        for k in raw:
            if k not in known:
                errors.append(f"unknown top-level field {k!r}")
        name = raw.get("name")
        if not isinstance(name, str) or not name:
            errors.append("name must be a non-empty string")
        params = _params(raw.get("params", {}), errors)
        nodes = [_node(n, i, params, errors) for i, n in enumerate(_list(raw.get("nodes", []), "nodes", errors))]
        nodes = [n for n in nodes if n is not None]
        duration = raw.get("duration_ns", 20_000_000)
        if not _is_int(duration) or duration <= 0:
            errors.append("duration_ns must be a positive integer")
        seed = raw.get("seed", 0)
        if not _is_int(seed) or seed < 0:
            errors.append("seed must be a non-negative integer")
        backend = raw.get("backend", "test")
        if backend not in ("test", "real"):
            errors.append("backend must be 'test' or 'real'")
        channels = _channels(raw.get("channels", {}), errors)
        expect = raw.get("expect", [])
        if not isinstance(expect, list) or not all(isinstance(e, dict) and "kind" in e for e in expect):
            errors.append("expect must be a list of objects with a 'kind'")
            expect = []
        if errors:
            raise ScenarioInvalid(errors)
        sc = cls(name=name, nodes=nodes, duration_ns=duration, seed=seed, backend=backend,
                 description=str(raw.get("description", "")), params=params, channels=channels,
                 expect=expect, schema=SCHEMA)
        _cross_check(sc, errors)
        if errors:
            raise ScenarioInvalid(errors)
        return sc

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        text = Path(path).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioInvalid([f"invalid JSON: {e}"]) from None
        return cls.from_dict(raw)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _list(v, what, errors):
    if not isinstance(v, list):
        errors.append(f"{what} must be a list")
        return []
    return v


def _vec(v, what, errors):
    if not (isinstance(v, list) and len(v) == 3 and all(_is_num(c) for c in v)):
        errors.append(f"{what} must be three finite numbers")
        return [0.0, 0.0, 0.0]
    return [float(c) for c in v]


def _params(raw, errors) -> Params:
    if not isinstance(raw, dict):
        errors.append("params must be an object")
        return Params()
    p = Params()
    names = {f.name: f for f in fields(Params)}
    for k, v in raw.items():
        if k not in names:
            errors.append(f"unknown param {k!r}")
            continue
        default = getattr(Params(), k)
        if v is None and default is None:
            continue
        if isinstance(default, float) or k in ("range_tolerance_m",):
            if not _is_num(v) or v < 0:
                errors.append(f"param {k} must be a non-negative number")
                continue
            v = float(v)
        elif not _is_int(v) or v < 0:
            errors.append(f"param {k} must be a non-negative integer")
            continue
        setattr(p, k, v)
    if p.beacon_period_ns <= 0:
        errors.append("beacon_period_ns must be positive")
    return p


def _ids(v, what, errors):
    if v == "*":
        return "*"
    if isinstance(v, list) and all(isinstance(x, str) for x in v):
        return list(v)
    errors.append(f"{what} must be '*' or a list of node ids")
    return []


def _capability(c, where, errors):
    if not isinstance(c, dict) or c.get("type") not in CAPABILITIES:
        errors.append(f"{where}: capability type must be one of {CAPABILITIES}")
        return None
    t = c["type"]
    out = {"type": t}
    allowed = {"type"}

    def num(key, default, integer=True, positive_ok=True):
        allowed.add(key)
        v = c.get(key, default)
        ok = _is_int(v) if integer else _is_num(v)
        if not ok or v < 0:
            errors.append(f"{where}: {key} must be a non-negative {'integer' if integer else 'number'}")
            v = default
        out[key] = v

    def flag(key, default):
        allowed.add(key)
        v = c.get(key, default)
        if not isinstance(v, bool):
            errors.append(f"{where}: {key} must be a boolean")
            v = default
        out[key] = v

    def ids(key, default="*"):
        allowed.add(key)
        out[key] = _ids(c.get(key, default), f"{where}: {key}", errors)

    def window():
        allowed.add("window_ns")
        w = c.get("window_ns")
        if w is not None and not (isinstance(w, list) and len(w) == 2 and all(_is_int(x) for x in w) and w[0] <= w[1]):
            errors.append(f"{where}: window_ns must be [start, end]")
            w = None
        out["window_ns"] = w

    if t == "delay_meacon":
        num("delay_ns", 0)
        ids("sources")
        ids("victims")
        flag("bidirectional", True)
        flag("overpower", True)
        window()
    elif t == "bent_pipe":
        allowed.add("rx_position")
        out["rx_position"] = _vec(c.get("rx_position"), f"{where}: rx_position", errors)
        num("latency_ns", 0)
        ids("sources")
        ids("victims")
        flag("bidirectional", True)
        flag("overpower", True)
        window()
    elif t == "replay":
        num("delay_ns", 50_000_000)
        ids("sources")
        ids("victims")
        allowed.add("messages")
        msgs = c.get("messages", "*")
        if msgs != "*" and not (isinstance(msgs, list) and all(m in MESSAGE_NAMES for m in msgs)):
            errors.append(f"{where}: messages must be '*' or message names")
            msgs = "*"
        out["messages"] = msgs
        allowed.add("max_replays")
        mr = c.get("max_replays")
        if mr is not None and (not _is_int(mr) or mr < 0):
            errors.append(f"{where}: max_replays must be a non-negative integer")
            mr = None
        out["max_replays"] = mr
    elif t == "spoof":
        allowed.update({"message", "claim", "position"})
        kind = c.get("message")
        if kind not in SPOOF_KINDS:
            errors.append(f"{where}: spoof message must be one of {SPOOF_KINDS}")
        out["message"] = kind
        claim = c.get("claim")
        if claim is not None and not isinstance(claim, str):
            errors.append(f"{where}: claim must be a node id")
        out["claim"] = claim
        out["position"] = None if c.get("position") is None else _vec(c.get("position"), f"{where}: position", errors)
        num("start_ns", 0)
        num("period_ns", 5_000_000)
        num("count", 1)
        ids("victims")
    elif t == "key_compromise":
        allowed.add("node")
        if not isinstance(c.get("node"), str):
            errors.append(f"{where}: key_compromise needs a node id")
        out["node"] = c.get("node")
    extra = set(c) - allowed
    if extra:
        errors.append(f"{where}: unknown capability fields {sorted(extra)}")
    return out


def _node(raw, i, params, errors):
    where = f"nodes[{i}]"
    if not isinstance(raw, dict):
        errors.append(f"{where} must be an object")
        return None
    known = {f.name for f in fields(NodeSpec)}
    for k in raw:
        if k not in known:
            errors.append(f"{where}: unknown field {k!r}")
    nid = raw.get("id")
    if not isinstance(nid, str) or not nid or len(nid.encode("ascii", "replace")) > 8 or not nid.isascii():
        errors.append(f"{where}: id must be 1-8 ASCII characters")
        nid = f"?{i}"
    where = f"node {nid}"
    role = raw.get("role")
    if role not in ROLES:
        errors.append(f"{where}: role must be one of {ROLES}")
    pos = _vec(raw.get("position"), f"{where}: position", errors)
    vel = _vec(raw.get("velocity", [0.0, 0.0, 0.0]), f"{where}: velocity", errors)
    clock_raw = raw.get("clock", {})
    clock = {"bias_ns": 0, "drift": 0.0, "quantization_ns": 1}
    if not isinstance(clock_raw, dict):
        errors.append(f"{where}: clock must be an object")
    else:
        for k, v in clock_raw.items():
            if k not in clock:
                errors.append(f"{where}: unknown clock field {k!r}")
            elif k == "drift":
                if not _is_num(v) or v <= -1:
                    errors.append(f"{where}: drift must be a number > -1")
                else:
                    clock[k] = float(v)
            elif not _is_int(v) or v < (1 if k == "quantization_ns" else 0):
                # local times travel as unsigned integers, so a clock may not run behind zero
                errors.append(f"{where}: {k} must be an integer (bias >= 0, quantization >= 1)")
            else:
                clock[k] = v
    antenna = raw.get("antenna")
    if antenna is not None:
        if not isinstance(antenna, dict):
            errors.append(f"{where}: antenna must be an object")
            antenna = None
        else:
            a = {"azimuth": 0.0, "elevation": 0.0, "rate_rad_s": 0.0, "beamwidth_rad": None}
            for k, v in antenna.items():
                if k not in a:
                    errors.append(f"{where}: unknown antenna field {k!r}")
                elif v is None and k == "beamwidth_rad":
                    continue
                elif not _is_num(v):
                    errors.append(f"{where}: antenna {k} must be a number")
                else:
                    a[k] = float(v)
            if not -math.pi / 2 <= a["elevation"] <= math.pi / 2:
                errors.append(f"{where}: antenna elevation out of range")
            antenna = a
    protocols = raw.get("protocols", [])
    allowed = NAVAID_PROTOCOLS if role == "navaid" else CLIENT_PROTOCOLS if role == "client" else ()
    if not isinstance(protocols, list) or any(p not in allowed for p in protocols):
        errors.append(f"{where}: protocols for a {role} must be drawn from {allowed}")
        protocols = []
    pd = raw.get("processing_delay_ns", 1000)
    if not _is_int(pd) or pd < 0:
        errors.append(f"{where}: processing_delay_ns must be a non-negative integer")
        pd = 1000
    start = raw.get("start_ns", 0)
    if not _is_int(start) or start < 0:
        errors.append(f"{where}: start_ns must be a non-negative integer")
        start = 0
    fix_every = raw.get("fix_every_ns")
    if fix_every is not None and (not _is_int(fix_every) or fix_every <= 0):
        errors.append(f"{where}: fix_every_ns must be a positive integer")
        fix_every = None
    md = raw.get("measures_direction", False)
    if not isinstance(md, bool):
        errors.append(f"{where}: measures_direction must be a boolean")
        md = False
    ranging = []
    for j, r in enumerate(_list(raw.get("ranging", []), f"{where}: ranging", errors)):
        if not isinstance(r, dict) or r.get("protocol") not in ("p4", "p5") or not isinstance(r.get("navaid"), str) \
                or not _is_int(r.get("at_ns")) or r.get("at_ns") < 0:
            errors.append(f"{where}: ranging[{j}] needs protocol p4|p5, navaid and at_ns")
            continue
        extra = set(r) - {"protocol", "navaid", "at_ns", "direction_report"}
        if extra:
            errors.append(f"{where}: ranging[{j}] unknown fields {sorted(extra)}")
        ranging.append(RangingSpec(r["protocol"], r["navaid"], r["at_ns"], bool(r.get("direction_report", False))))
    daisy = []
    for j, r in enumerate(_list(raw.get("daisy", []), f"{where}: daisy", errors)):
        if not isinstance(r, dict) or not isinstance(r.get("peer"), str) or not _is_int(r.get("at_ns")):
            errors.append(f"{where}: daisy[{j}] needs peer and at_ns")
            continue
        daisy.append(DaisySpec(r["peer"], r["at_ns"]))
    caps = []
    for j, c in enumerate(_list(raw.get("capabilities", []), f"{where}: capabilities", errors)):
        cap = _capability(c, f"{where}: capabilities[{j}]", errors)
        if cap is not None:
            caps.append(cap)
    if caps and role != "attacker":
        errors.append(f"{where}: only attackers may hold capabilities")
    if (ranging or daisy) and role != "client":
        errors.append(f"{where}: only clients initiate ranging")
    return NodeSpec(id=nid, role=role, position=pos, velocity=vel, clock=clock, antenna=antenna,
                    processing_delay_ns=pd, protocols=list(protocols), measures_direction=md,
                    start_ns=start, fix_every_ns=fix_every, ranging=ranging, daisy=daisy, capabilities=caps)


def _channels(raw, errors) -> dict:
    out = {"blocked": [], "loss": [], "transmission_security": False}
    if not isinstance(raw, dict):
        errors.append("channels must be an object")
        return out
    for k in raw:
        if k not in out:
            errors.append(f"unknown channels field {k!r}")
    blocked = raw.get("blocked", [])
    if not isinstance(blocked, list) or not all(isinstance(b, list) and len(b) == 2 and all(isinstance(x, str) for x in b) for b in blocked):
        errors.append("channels.blocked must be a list of [a, b] id pairs")
    else:
        out["blocked"] = [list(b) for b in blocked]
    for j, l in enumerate(_list(raw.get("loss", []), "channels.loss", errors)):
        if not isinstance(l, dict):
            errors.append(f"channels.loss[{j}] must be an object")
            continue
        e = {"from": l.get("from", "*"), "to": l.get("to", "*"), "start_ns": l.get("start_ns", 0),
             "end_ns": l.get("end_ns"), "probability": l.get("probability", 1.0)}
        if not (_is_int(e["start_ns"]) and (e["end_ns"] is None or _is_int(e["end_ns"]))
                and _is_num(e["probability"]) and 0 <= e["probability"] <= 1):
            errors.append(f"channels.loss[{j}] has bad window or probability")
            continue
        out["loss"].append(e)
    ts = raw.get("transmission_security", False)
    if not isinstance(ts, bool):
        errors.append("channels.transmission_security must be a boolean")
    else:
        out["transmission_security"] = ts
    return out


def _cross_check(sc: Scenario, errors: list) -> None:
    ids = [n.id for n in sc.nodes]
    seen = set()
    for i in ids:
        if i in seen:
            errors.append(f"duplicate node id {i!r}")
        seen.add(i)
    roles = {n.id: n.role for n in sc.nodes}

    def ref(i, what, role=None):
        if i not in roles:
            errors.append(f"{what}: unknown node {i!r}")
        elif role and roles[i] != role:
            errors.append(f"{what}: {i!r} is not a {role}")

    for n in sc.nodes:
        for r in n.ranging:
            ref(r.navaid, f"node {n.id} ranging", "navaid")
            if r.navaid in roles and r.protocol not in sc.node(r.navaid).protocols:
                errors.append(f"node {n.id} ranging: {r.navaid} does not serve {r.protocol}")
            if r.direction_report and r.navaid in roles and not sc.node(r.navaid).measures_direction:
                errors.append(f"node {n.id} ranging: {r.navaid} does not measure direction")
        for d in n.daisy:
            ref(d.peer, f"node {n.id} daisy", "navaid")
            if d.peer in roles and "p4" not in sc.node(d.peer).protocols:
                errors.append(f"node {n.id} daisy: {d.peer} does not serve p4")
        for c in n.capabilities:
            for key in ("sources", "victims"):
                if isinstance(c.get(key), list):
                    for i in c[key]:
                        ref(i, f"node {n.id} {c['type']}.{key}")
            if c["type"] == "key_compromise" and c.get("node") is not None:
                ref(c["node"], f"node {n.id} key_compromise")
            if c["type"] == "spoof" and c.get("claim") is not None:
                ref(c["claim"], f"node {n.id} spoof.claim")
    for pair in sc.channels["blocked"]:
        for i in pair:
            ref(i, "channels.blocked")
