"""``navsec``: run scenarios, check corpora, and handle certificates.

Exit codes: 0 success, 1 expectation mismatch or failed check, 2 invalid
scenario or arguments, 3 I/O or parse error, 4 no trust path.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import certs
from .core import NodeId, Position, PositionFunction
from .crypto import KeyPair, PrivateKey, PublicKey, backend_for, make_backend
from .scenario import Scenario, ScenarioInvalid
from .simnet import run as simulate
from .wire import MalformedMessage, decode_as

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID, EXIT_IO, EXIT_NO_TRUST = 0, 1, 2, 3, 4
KEY_SCHEMA = "navsec.key/1"


class IoError(Exception):
    """A file could not be read, parsed or written."""


def _read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise IoError(f"{path}: {e.strerror or e}") from None
    except json.JSONDecodeError as e:
        raise IoError(f"{path}: invalid JSON ({e})") from None


def _write(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise IoError(f"{path}: {e.strerror or e}") from None


# -- run ------------------------------------------------------------------

def _report(trace, scenario: Scenario) -> str:
    s = trace.summary
    lines = [f"scenario {scenario.name}  seed {trace.header['seed']}"]
    for key, fix in s["fixes"].items():
        accused = f" accused={fix['accused']}" if fix.get("accused") else ""
        err = fix.get("error_m")
        err_s = "n/a" if err is None else f"{err:.3f} m"
        flag = "  [known impossible: passive detection cannot see this]" if fix.get("known_impossible") else ""
        lines.append(f"  fix {key}: {fix['verdict']}{accused} error {err_s}{flag}")
    for k, v in s["counts"].items():
        lines.append(f"  {k}: {v}")
    if s["attacks"]:
        lines.append("  attacks:")
        width = max(len(a["attacker"]) for a in s["attacks"])
        for a in s["attacks"]:
            lines.append(f"    {a['attacker']:<{width}}  {a['capability']:<14} {a['outcome']:<10} "
                         f"detected={a['detected']} harm={a['undetected_harm']} degraded={a['degraded']}")
    for e in s["expectations"]:
        mark = "ok " if e["ok"] else "FAIL"
        lines.append(f"  expect {mark} {e['expect']['kind']} {json.dumps(e['expect'].get('where', {}))}"
                     + ("" if e["ok"] else f": {'; '.join(e['problems'])}"))
    return "\n".join(lines)


def _plot(trace, path: Path) -> str | None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return "matplotlib is not installed; skipping --plot"
    fixes = [r for r in trace.records if r["kind"] in ("fix", "bearing_fix") and r.get("position")]
    fig, ax = plt.subplots(figsize=(6, 6))
    for proto in sorted({r["protocol"] for r in fixes}):
        pts = [r["position"] for r in fixes if r["protocol"] == proto]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"fix ({proto})", ms=4)
    truth = [r["true_position"] for r in fixes]
    if truth:
        ax.plot([p[0] for p in truth], [p[1] for p in truth], "k+", label="truth", ms=10)
    for n in trace.header["scenario"]["nodes"]:
        if n["role"] == "navaid":
            ax.plot(n["position"][0], n["position"][1], "^", color="gray")
            ax.annotate(n["id"], n["position"][:2], fontsize=8)
    ax.set_xlabel("east (m)")
    ax.set_ylabel("north (m)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return None


def cmd_run(args) -> int:
    try:
        scenario = Scenario.from_dict(_read_json(args.scenario))
        trace = simulate(scenario, args.seed)
        text = trace.to_jsonl()
        if args.out:
            _write(args.out, text)
            print(_report(trace, scenario))
        else:
            sys.stdout.write(text)
        if args.plot:
            target = Path(args.out).with_suffix(".png") if args.out else Path(f"{scenario.name}.png")
            warning = _plot(trace, target)
            print(warning or f"plot written to {target}", file=sys.stderr)
    except ScenarioInvalid as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return EXIT_INVALID
    except IoError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if trace.ok else EXIT_MISMATCH


# -- suite ----------------------------------------------------------------

def _suite_one(path: str) -> dict:
    try:
        scenario = Scenario.from_dict(_read_json(path))
    except (ScenarioInvalid, IoError) as e:
        return {"path": path, "status": "INVALID", "detail": str(e)}
    trace = simulate(scenario)
    exp = trace.summary["expectations"]
    failed = [e for e in exp if not e["ok"]]
    return {"path": path, "name": scenario.name, "status": "PASS" if not failed else "FAIL",
            "expectations": len(exp), "failed": len(failed),
            "detail": "; ".join(p for e in failed for p in e["problems"][:1])}


def run_suite(directory: str | Path, jobs: int = 1) -> list[dict]:
    """Run every ``*.json`` scenario in ``directory``; results in path order."""
    paths = sorted(str(p) for p in Path(directory).glob("*.json"))
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_suite_one, paths))
    return [_suite_one(p) for p in paths]


def cmd_suite(args) -> int:
    if not Path(args.directory).is_dir():
        print(f"error: {args.directory} is not a directory", file=sys.stderr)
        return EXIT_IO
    results = run_suite(args.directory, args.jobs)
    width = max([len(Path(r["path"]).name) for r in results] + [8])
    print(f"{'scenario':<{width}}  status   expectations")
    for r in results:
        n = f"{r['expectations'] - r['failed']}/{r['expectations']}" if "expectations" in r else "-"
        line = f"{Path(r['path']).name:<{width}}  {r['status']:<7}  {n}"
        if r["status"] != "PASS" and r.get("detail"):
            line += f"  {r['detail']}"
        print(line)
    passed = sum(r["status"] == "PASS" for r in results)
    print(f"{passed}/{len(results)} passed")
    return EXIT_OK if passed == len(results) else EXIT_MISMATCH


# -- certificates -----------------------------------------------------------

def _load_key(path: str) -> tuple[PrivateKey | None, PublicKey]:
    d = _read_json(path)
    if d.get("schema") != KEY_SCHEMA:
        raise IoError(f"{path}: not a {KEY_SCHEMA} file")
    try:
        pub = PublicKey.from_bytes(bytes.fromhex(d["public"]))
        priv = PrivateKey(int(d["alg"]), bytes.fromhex(d["private"])) if d.get("private") else None
    except (KeyError, ValueError) as e:
        raise IoError(f"{path}: bad key file ({e})") from None
    return priv, pub


def _load_cert(path: str) -> certs.Certificate:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise IoError(f"{path}: {e.strerror or e}") from None
    try:
        if raw.lstrip().startswith(b"{"):
            return certs.cert_from_json(json.loads(raw))
        return decode_as(raw, certs.Certificate)
    except (json.JSONDecodeError, MalformedMessage, UnicodeDecodeError) as e:
        raise IoError(f"{path}: not a certificate ({e})") from None


def cmd_keygen(args) -> int:
    be = make_backend(args.backend, args.seed)
    kp: KeyPair = be.generate_keypair()
    out = {"schema": KEY_SCHEMA, "alg": kp.private.alg, "private": kp.private.seed.hex(),
           "public": kp.public.to_bytes().hex(), "key_id": kp.public.key_id.hex()}
    _write(args.out, json.dumps(out, indent=2, sort_keys=True) + "\n")
    public_out = {k: v for k, v in out.items() if k != "private"}
    if args.public_out:
        _write(args.public_out, json.dumps(public_out, indent=2, sort_keys=True) + "\n")
    print(f"key {out['key_id']} written to {args.out}")
    return EXIT_OK


def _level(arg: str) -> certs.Assertion:
    name, _, value = arg.partition("=")
    try:
        kind = certs.AssertionKind[name.upper()]
        enum = {certs.AssertionKind.CRYPTO_SECURITY_TYPE: certs.CryptoSecurityType,
                certs.AssertionKind.PHYSICAL_SECURITY_LEVEL: certs.PhysicalSecurityLevel,
                certs.AssertionKind.PLATFORM_TYPE: certs.PlatformType,
                certs.AssertionKind.OWNER_TYPE: certs.OwnerType}[kind]
        level = enum[value.upper()] if not value.isdigit() else enum(int(value))
    except (KeyError, ValueError):
        raise argparse.ArgumentTypeError(f"bad level assertion {arg!r}") from None
    return certs.level_assertion(kind, level)


def cmd_issue(args) -> int:
    priv, _ = _load_key(args.certifier)
    if priv is None:
        raise IoError(f"{args.certifier}: no private key")
    _, subject_pub = _load_key(args.subject_key)
    assertions = [certs.key_delegation(subject_pub)]
    if args.position:
        vel = Position(*args.velocity) if args.velocity else Position(0.0, 0.0, 0.0)
        assertions.append(certs.position_assertion(PositionFunction(Position(*args.position), vel, args.epoch)))
    if args.processing_delay is not None:
        assertions.append(certs.processing_delay_assertion(args.processing_delay))
    for lv in args.level or []:
        assertions.append(_level(lv))
    for text in args.owner or []:
        assertions.append(certs.text_assertion(certs.AssertionKind.OWNER, text))
    be = backend_for(priv.alg)
    c = certs.cert_issue(priv, NodeId.from_name(args.subject), assertions, (args.valid_from, args.valid_to), be)
    if args.binary:
        try:
            Path(args.out).write_bytes(c.encode())
        except OSError as e:
            raise IoError(f"{args.out}: {e.strerror or e}") from None
    else:
        _write(args.out, json.dumps(certs.cert_to_json(c), indent=2, sort_keys=True) + "\n")
    print(f"certificate {c.digest.hex()[:16]} for {args.subject} written to {args.out}")
    return EXIT_OK


def _backend_for_cert(c: certs.Certificate):
    return backend_for(c.certifier_key.alg)


def cmd_verify(args) -> int:
    c = _load_cert(args.cert)
    revoked = [bytes.fromhex(r) for r in args.revoked or []]
    try:
        certs.cert_verify(c, args.at, revoked, _backend_for_cert(c))
    except certs.CertError as e:
        print(f"{type(e).__name__}: {e}")
        return EXIT_MISMATCH
    print(f"valid: {c.subject.name} at t={args.at}")
    return EXIT_OK


def cmd_chain(args) -> int:
    roots = [_load_key(r)[1] for r in args.root]
    chain = [_load_cert(p) for p in args.certs]
    revoked = [bytes.fromhex(r) for r in args.revoked or []]
    minimums = {}
    for m in args.minimum or []:
        a = _level(m)
        minimums[a.kind] = a.value[0]
    policy = certs.TrustPolicy.create(roots, minimums, revoked)
    subject = NodeId.from_name(args.subject) if args.subject else chain[-1].subject
    try:
        key = certs.resolve_key(subject, chain, policy, args.at, _backend_for_cert(chain[0]))
    except certs.NoTrustPath as e:
        print(f"NoTrustPath: {e}")
        return EXIT_NO_TRUST
    print(f"trusted: {subject.name} key {key.key_id.hex()}")
    return EXIT_OK


# -- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="navsec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("scenario")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--out", help="trace file (JSON lines); prints a report instead of the trace")
    r.add_argument("--plot", action="store_true", help="also write a PNG of fix positions")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("suite", help="run every scenario in a directory")
    s.add_argument("directory")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_suite)

    c = sub.add_parser("cert", help="certificate tools")
    csub = c.add_subparsers(dest="cert_command", required=True)

    k = csub.add_parser("keygen", help="create a key pair file")
    k.add_argument("--out", required=True)
    k.add_argument("--public-out", help="also write the public half alone")
    k.add_argument("--seed", type=int, default=None, help="deterministic key (testing only)")
    k.add_argument("--backend", choices=("real", "test"), default="real")
    k.set_defaults(func=cmd_keygen)

    i = csub.add_parser("issue", help="sign a certificate")
    i.add_argument("--certifier", required=True, help="key file of the signer")
    i.add_argument("--subject", required=True, help="subject node id (up to 8 ASCII characters)")
    i.add_argument("--subject-key", required=True, help="key file whose public key is delegated")
    i.add_argument("--valid-from", type=int, default=0)
    i.add_argument("--valid-to", type=int, required=True)
    i.add_argument("--position", type=float, nargs=3, metavar=("X", "Y", "Z"))
    i.add_argument("--velocity", type=float, nargs=3, metavar=("VX", "VY", "VZ"))
    i.add_argument("--epoch", type=int, default=0)
    i.add_argument("--processing-delay", type=int, help="certified responder delay, ns")
    i.add_argument("--level", action="append", help="e.g. physical_security_level=sealed")
    i.add_argument("--owner", action="append")
    i.add_argument("--binary", action="store_true", help="write the wire encoding instead of JSON")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_issue)

    v = csub.add_parser("verify", help="check one certificate's signature, validity and revocation")
    v.add_argument("cert")
    v.add_argument("--at", type=int, required=True, help="time to check at, ns")
    v.add_argument("--revoked", action="append", help="revoked certificate digest (hex)")
    v.set_defaults(func=cmd_verify)

    ch = csub.add_parser("chain", help="resolve a subject's key through a root-first chain")
    ch.add_argument("certs", nargs="+", help="certificate files, root-signed first")
    ch.add_argument("--root", action="append", required=True, help="trusted root key file")
    ch.add_argument("--subject")
    ch.add_argument("--at", type=int, required=True)
    ch.add_argument("--revoked", action="append")
    ch.add_argument("--minimum", action="append", help="policy minimum, e.g. crypto_security_type=2")
    ch.set_defaults(func=cmd_chain)
    return p


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("NAVSEC_LOG", "events")
    if level not in ("verdicts", "events", "debug"):
        print(f"NAVSEC_LOG must be verdicts, events or debug (got {level!r})", file=sys.stderr)
        return EXIT_INVALID
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except IoError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
