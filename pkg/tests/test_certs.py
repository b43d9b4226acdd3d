import json

import pytest

from navsec import certs
from navsec.certs import (AssertionKind, BadSignature, CryptoSecurityType, Expired, NoPositionAssertion,
                          NoTrustPath, Revoked, TrustPolicy, cert_issue, cert_verify, resolve_key)
from navsec.core import Direction, NodeId, Position, PositionFunction
from navsec.crypto import make_backend
from navsec.wire import decode


@pytest.fixture(params=["test", "real"])
def be(request):
    return make_backend(request.param, 3)


def _leaf(be, issuer, subject="nav1", window=(0, 1000), extra=()):
    kp = be.generate_keypair()
    a = [certs.key_delegation(kp.public), certs.position_assertion(Position(1, 2, 3)), *extra]
    return kp, cert_issue(issuer.private, NodeId.from_name(subject), a, window, be)


def test_issue_and_verify_window(be):
    root = be.generate_keypair()
    _, c = _leaf(be, root)
    assert cert_verify(c, 0, backend=be) and cert_verify(c, 1000, backend=be)
    with pytest.raises(Expired):
        cert_verify(c, 1001, backend=be)


def test_flipped_assertion_byte_is_bad_signature(be):
    root = be.generate_keypair()
    _, c = _leaf(be, root)
    a = c.assertions[1]
    v = bytearray(a.value)
    v[3] ^= 0x01
    forged = certs.Certificate(c.subject, c.valid_from, c.valid_to, c.certifier_key,
                               (c.assertions[0], certs.Assertion(a.kind, bytes(v))), c.sig)
    with pytest.raises(BadSignature):
        cert_verify(forged, 10, backend=be)


def test_revocation_is_distinct_and_dominates(be):
    root = be.generate_keypair()
    _, c = _leaf(be, root)
    with pytest.raises(Revoked):
        cert_verify(c, 10, [c.digest], be)
    # revoked beats expired
    with pytest.raises(Revoked):
        cert_verify(c, 5000, [c.digest], be)


def test_removing_revocation_restores_validity(be):
    root = be.generate_keypair()
    _, c = _leaf(be, root)
    p = TrustPolicy.create([root.public]).with_revoked(c.digest)
    with pytest.raises(NoTrustPath):
        resolve_key(c.subject, [c], p, 5, be)
    assert resolve_key(c.subject, [c], p.without_revoked(c.digest), 5, be) == c.delegated_key()


def test_empty_window_rejected(be):
    root = be.generate_keypair()
    with pytest.raises(ValueError):
        cert_issue(root.private, NodeId.from_name("x"), [], (10, 5), be)


def test_canonical_encoding(be):
    root = be.generate_keypair()
    kp = be.generate_keypair()
    a = [certs.key_delegation(kp.public)]
    sid = NodeId.from_name("n")
    c1 = cert_issue(root.private, sid, a, (0, 9), be)
    c2 = cert_issue(root.private, sid, a, (0, 9), be)
    assert c1.encode() == c2.encode()
    assert decode(c1.encode()).encode() == c1.encode()


def test_unknown_assertion_kinds_survive_re_encoding(be):
    root = be.generate_keypair()
    odd = certs.Assertion(0x77, b"opaque")
    _, c = _leaf(be, root, extra=[odd])
    back = decode(c.encode())
    assert back.assertions[-1] == odd and back.assertions[-1].kind_name == "UNKNOWN_0x77"
    assert cert_verify(back, 1, backend=be)


def test_depth_one_chain(be):
    root = be.generate_keypair()
    kp, c = _leaf(be, root)
    assert resolve_key(c.subject, [c], TrustPolicy.create([root.public]), 5, be) == kp.public


def _chain3(be):
    root = be.generate_keypair()
    k1, c1 = _leaf(be, root, "ca1")
    k2, c2 = _leaf(be, k1, "ca2")
    k3, c3 = _leaf(be, k2, "nav1")
    return root, [c1, c2, c3], k3


def test_depth_three_chain_and_middle_revocation(be):
    root, chain, k3 = _chain3(be)
    p = TrustPolicy.create([root.public])
    assert resolve_key(NodeId.from_name("nav1"), chain, p, 5, be) == k3.public
    with pytest.raises(NoTrustPath) as e:
        resolve_key(NodeId.from_name("nav1"), chain, p.with_revoked(chain[1].digest), 5, be)
    assert e.value.link == 1


def test_chain_with_expired_link_is_refused(be):
    root = be.generate_keypair()
    k1, c1 = _leaf(be, root, "ca1", window=(0, 100))
    k2, c2 = _leaf(be, k1, "nav1", window=(0, 1000))
    p = TrustPolicy.create([root.public])
    assert resolve_key(c2.subject, [c1, c2], p, 100, be) == k2.public
    with pytest.raises(NoTrustPath):
        resolve_key(c2.subject, [c1, c2], p, 101, be)


def test_policy_minimum(be):
    root = be.generate_keypair()
    low = [certs.level_assertion(AssertionKind.CRYPTO_SECURITY_TYPE, CryptoSecurityType.REMOTELY_SECURE)]
    _, c = _leaf(be, root, extra=low)
    p = TrustPolicy.create([root.public], {AssertionKind.CRYPTO_SECURITY_TYPE: CryptoSecurityType.TAMPER_RESISTANT})
    with pytest.raises(NoTrustPath, match="below minimum"):
        resolve_key(c.subject, [c], p, 5, be)
    _, plain = _leaf(be, root)
    with pytest.raises(NoTrustPath, match="missing"):
        resolve_key(plain.subject, [plain], p, 5, be)
    assert resolve_key(c.subject, [c], p.with_minimum(AssertionKind.CRYPTO_SECURITY_TYPE, 1), 5, be)


def test_broken_links(be):
    root, chain, _ = _chain3(be)
    p = TrustPolicy.create([root.public])
    nid = NodeId.from_name("nav1")
    with pytest.raises(NoTrustPath, match="empty"):
        resolve_key(nid, [], p, 5, be)
    with pytest.raises(NoTrustPath, match="root"):
        resolve_key(nid, chain[1:], p, 5, be)
    with pytest.raises(NoTrustPath, match="previous delegation"):
        resolve_key(nid, [chain[0], chain[2]], p, 5, be)
    with pytest.raises(NoTrustPath, match="leaf subject"):
        resolve_key(NodeId.from_name("other"), chain, p, 5, be)


def test_chain_depth_cap(be):
    root = be.generate_keypair()
    chain, issuer = [], root
    for k in range(certs.MAX_CHAIN_DEPTH + 1):
        issuer, c = _leaf(be, issuer, f"c{k}")
        chain.append(c)
    with pytest.raises(NoTrustPath, match="longer"):
        resolve_key(chain[-1].subject, chain, TrustPolicy.create([root.public]), 5, be)


def test_navaid_position_at(be):
    root = be.generate_keypair()
    _, const = _leaf(be, root)
    assert certs.navaid_position_at(const, 10**12) == Position(1, 2, 3)
    kp = be.generate_keypair()
    lin = cert_issue(root.private, NodeId.from_name("mv"),
                     [certs.key_delegation(kp.public),
                      certs.position_assertion(PositionFunction(Position(0, 0, 0), Position(1, 0, 0), 0))], (0, 10**11), be)
    assert certs.navaid_position_at(lin, 10 * 10**9) == Position(10, 0, 0)
    bare = cert_issue(root.private, NodeId.from_name("b"), [certs.key_delegation(kp.public)], (0, 9), be)
    with pytest.raises(NoPositionAssertion):
        certs.navaid_position_at(bare, 0)


def test_antenna_and_processing_delay(be):
    root = be.generate_keypair()
    _, c = _leaf(be, root, extra=[certs.antenna_assertion(Direction(1.0, 0.2)), certs.processing_delay_assertion(1234)])
    assert certs.antenna_direction_at(c, 5) == Direction(1.0, 0.2)
    assert certs.processing_delay_of(c) == 1234


def test_json_debug_form_round_trips(be):
    root = be.generate_keypair()
    _, c = _leaf(be, root, extra=[certs.text_assertion(AssertionKind.OWNER, "Example Air")])
    d = certs.cert_to_json(c)
    assert certs.cert_from_json(json.loads(json.dumps(d))) == c


def test_key_directory(be):
    root = be.generate_keypair()
    kp, c = _leaf(be, root)
    kd = certs.KeyDirectory(TrustPolicy.create([root.public]), backend=be)
    kd.add([c])
    assert kd.lookup(c.subject, 5) == kp.public
    assert kd.find_by_key_id(kp.public.key_id, 5) == c.subject
    with pytest.raises(NoTrustPath):
        kd.lookup(NodeId.from_name("ghost"), 5)


def test_assertion_constructor_guards():
    with pytest.raises(ValueError):
        certs.level_assertion(AssertionKind.OWNER, 1)
    with pytest.raises(ValueError):
        certs.text_assertion(AssertionKind.PLATFORM_TYPE, "x")
