"""Hash, signature and encryption primitives behind one interface.

Two backends satisfy the same laws:

* ``RealBackend`` (tag 0x01): Ed25519 signatures, ChaCha20-Poly1305 for
  symmetric envelopes, X25519 + HKDF + ChaCha20-Poly1305 for public-key
  encryption. Randomness from the OS unless seeded.
* ``TestBackend`` (tag 0x7F): Ed25519 signatures, an encrypt-then-MAC
  construction over SHAKE-256/HMAC-SHA256 for symmetric and public-key
  envelopes, and all randomness drawn from a seeded generator so
  simulation traces are byte-reproducible.

A key pair is a 32-byte seed. The public key is the Ed25519 verification key
concatenated with the X25519 key agreement key, so one certified key serves
both signing and public-key encryption.

Nothing outside this module imports the underlying primitive library.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import random
from collections import Counter
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

REAL_TAG = 0x01
TEST_TAG = 0x7F

DIGEST_SIZE = 32
NONCE_SIZE = 12
KEY_ID_SIZE = 8
PUBLIC_KEY_SIZE = 64
SIGNATURE_SIZE = 64

ASYMMETRIC_OPS = frozenset({"keygen", "sign", "verify", "pk_encrypt", "pk_decrypt"})
SYMMETRIC_OPS = frozenset({"sym_encrypt", "sym_decrypt"})


class CryptoError(Exception):
    pass


class IntegrityFailure(CryptoError):
    """Decryption failed. Wrong key and tampering are deliberately indistinguishable."""


class KeyTagMismatch(CryptoError):
    pass


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class PrivateKey:
    alg: int
    seed: bytes

    def __repr__(self) -> str:
        return f"PrivateKey(alg=0x{self.alg:02x}, seed=<redacted>)"


@dataclass(frozen=True)
class PublicKey:
    alg: int
    data: bytes

    def __post_init__(self) -> None:
        if len(self.data) != PUBLIC_KEY_SIZE:
            raise ValueError("public key must be 64 bytes")

    @property
    def key_id(self) -> bytes:
        return digest(bytes([self.alg]) + self.data)[:KEY_ID_SIZE]

    def to_bytes(self) -> bytes:
        return bytes([self.alg]) + self.data

    @classmethod
    def from_bytes(cls, b: bytes) -> "PublicKey":
        if len(b) != PUBLIC_KEY_SIZE + 1:
            raise ValueError("bad public key length")
        return cls(b[0], bytes(b[1:]))


@dataclass(frozen=True)
class KeyPair:
    private: PrivateKey
    public: PublicKey


@dataclass(frozen=True)
class SymmetricKey:
    key: bytes
    key_id: bytes
    alg: int

    def __repr__(self) -> str:
        return f"SymmetricKey(key_id={self.key_id.hex()}, alg=0x{self.alg:02x})"


@dataclass(frozen=True)
class Signature:
    alg: int
    data: bytes

    def to_bytes(self) -> bytes:
        return bytes([self.alg]) + self.data

    @classmethod
    def from_bytes(cls, b: bytes) -> "Signature":
        if len(b) < 1:
            raise ValueError("empty signature")
        return cls(b[0], bytes(b[1:]))


@dataclass(frozen=True)
class Ciphertext:
    alg: int
    nonce: bytes
    data: bytes


@dataclass(frozen=True)
class CryptoCosts:
    """Simulated wall time charged per operation (ns)."""

    sign_ns: int = 2_000_000
    verify_ns: int = 1_000_000
    sym_ns: int = 10_000
    pk_encrypt_ns: int = 1_000_000
    pk_decrypt_ns: int = 2_000_000
    hash_ns: int = 0

    def cost(self, op: str) -> int:
        return {
            "sign": self.sign_ns,
            "verify": self.verify_ns,
            "sym_encrypt": self.sym_ns,
            "sym_decrypt": self.sym_ns,
            "pk_encrypt": self.pk_encrypt_ns,
            "pk_decrypt": self.pk_decrypt_ns,
            "hash": self.hash_ns,
            "keygen": self.sign_ns,
        }.get(op, 0)


def _ed_private(seed: bytes) -> Ed25519PrivateKey:
    return Ed25519PrivateKey.from_private_bytes(seed)


def _x_private(seed: bytes) -> X25519PrivateKey:
    return X25519PrivateKey.from_private_bytes(digest(b"navsec/x25519" + seed))


def _raw(pub) -> bytes:
    return pub.public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)


class CryptoBackend:
    """Common behaviour; subclasses choose randomness and the AEAD."""

    tag: int

    def __init__(self, seed: int | None = None):
        self._rng = random.Random(seed) if seed is not None else None
        self.op_counts: Counter = Counter()

    # -- randomness -----------------------------------------------------
    def random_bytes(self, n: int) -> bytes:
        if self._rng is None:
            return os.urandom(n)
        return self._rng.randbytes(n)

    # -- keys -------------------------------------------------------------
    def _check(self, alg: int) -> None:
        if alg != self.tag:
            raise KeyTagMismatch(f"key tag 0x{alg:02x} does not match backend 0x{self.tag:02x}")

    def generate_keypair(self) -> KeyPair:
        self.op_counts["keygen"] += 1
        priv = PrivateKey(self.tag, self.random_bytes(32))
        return KeyPair(priv, self.public_key(priv))

    def public_key(self, priv: PrivateKey) -> PublicKey:
        self._check(priv.alg)
        ed = _raw(_ed_private(priv.seed).public_key())
        x = _raw(_x_private(priv.seed).public_key())
        return PublicKey(self.tag, ed + x)

    def new_symmetric_key(self) -> SymmetricKey:
        key = self.random_bytes(32)
        return SymmetricKey(key, digest(b"navsec/keyid" + key)[:KEY_ID_SIZE], self.tag)

    def new_nonce(self) -> bytes:
        return self.random_bytes(NONCE_SIZE)

    # -- signatures -------------------------------------------------------
    def sign(self, priv: PrivateKey, data: bytes) -> Signature:
        self._check(priv.alg)
        self.op_counts["sign"] += 1
        return Signature(self.tag, _ed_private(priv.seed).sign(data))

    def verify(self, pub: PublicKey, data: bytes, sig: Signature) -> bool:
        self.op_counts["verify"] += 1
        if pub.alg != self.tag or sig.alg != self.tag or len(sig.data) != SIGNATURE_SIZE:
            return False
        try:
            Ed25519PublicKey.from_public_bytes(pub.data[:32]).verify(sig.data, data)
        except (InvalidSignature, ValueError):
            return False
        return True

    # -- symmetric ------------------------------------------------------
    def sym_encrypt(self, k: SymmetricKey, nonce: bytes, data: bytes, aad: bytes = b"") -> Ciphertext:
        self._check(k.alg)
        if len(nonce) != NONCE_SIZE:
            raise ValueError("nonce must be 12 bytes")
        self.op_counts["sym_encrypt"] += 1
        return Ciphertext(self.tag, nonce, self._seal(k.key, nonce, data, aad))

    def sym_decrypt(self, k: SymmetricKey, ct: Ciphertext, aad: bytes = b"") -> bytes:
        self.op_counts["sym_decrypt"] += 1
        if k.alg != self.tag or ct.alg != self.tag or len(ct.nonce) != NONCE_SIZE:
            raise IntegrityFailure("decryption failed")
        return self._open(k.key, ct.nonce, ct.data, aad)

    # -- public key encryption -------------------------------------------
    def pk_encrypt(self, pub: PublicKey, data: bytes) -> Ciphertext:
        self._check(pub.alg)
        self.op_counts["pk_encrypt"] += 1
        eph = X25519PrivateKey.from_private_bytes(self.random_bytes(32))
        eph_pub = _raw(eph.public_key())
        shared = eph.exchange(X25519PublicKey.from_public_bytes(pub.data[32:]))
        key = self._kdf(shared, eph_pub + pub.data[32:])
        nonce = self.new_nonce()
        return Ciphertext(self.tag, nonce, eph_pub + self._seal(key, nonce, data, eph_pub))

    def pk_decrypt(self, priv: PrivateKey, ct: Ciphertext) -> bytes:
        self.op_counts["pk_decrypt"] += 1
        if priv.alg != self.tag or ct.alg != self.tag or len(ct.data) < 32 or len(ct.nonce) != NONCE_SIZE:
            raise IntegrityFailure("decryption failed")
        eph_pub, body = ct.data[:32], ct.data[32:]
        x = _x_private(priv.seed)
        try:
            shared = x.exchange(X25519PublicKey.from_public_bytes(eph_pub))
        except ValueError:
            # all-zero shared secret from a low-order point
            raise IntegrityFailure("decryption failed") from None
        key = self._kdf(shared, eph_pub + _raw(x.public_key()))
        return self._open(key, ct.nonce, body, eph_pub)

    # -- backend specific -------------------------------------------------
    def _seal(self, key: bytes, nonce: bytes, data: bytes, aad: bytes) -> bytes:
        raise NotImplementedError

    def _open(self, key: bytes, nonce: bytes, data: bytes, aad: bytes) -> bytes:
        raise NotImplementedError

    def _kdf(self, shared: bytes, context: bytes) -> bytes:
        raise NotImplementedError


class RealBackend(CryptoBackend):
    tag = REAL_TAG

    def _seal(self, key, nonce, data, aad):
        return ChaCha20Poly1305(key).encrypt(nonce, data, aad)

    def _open(self, key, nonce, data, aad):
        try:
            return ChaCha20Poly1305(key).decrypt(nonce, data, aad)
        except InvalidTag:
            raise IntegrityFailure("decryption failed") from None

    def _kdf(self, shared, context):
        return HKDF(hashes.SHA256(), 32, salt=None, info=b"navsec/pk" + context).derive(shared)


class TestBackend(CryptoBackend):
    __test__ = False  # not a pytest class
    tag = TEST_TAG

    def __init__(self, seed: int = 0):
        super().__init__(seed)

    @staticmethod
    def _stream(key: bytes, nonce: bytes, n: int) -> bytes:
        return hashlib.shake_256(b"navsec/stream" + key + nonce).digest(n)

    @staticmethod
    def _tag(key: bytes, nonce: bytes, aad: bytes, body: bytes) -> bytes:
        mac_key = hashlib.sha256(b"navsec/mac" + key).digest()
        msg = len(aad).to_bytes(4, "big") + aad + nonce + body
        return hmac.new(mac_key, msg, hashlib.sha256).digest()

    def _seal(self, key, nonce, data, aad):
        body = bytes(a ^ b for a, b in zip(data, self._stream(key, nonce, len(data))))
        return body + self._tag(key, nonce, aad, body)

    def _open(self, key, nonce, data, aad):
        if len(data) < 32:
            raise IntegrityFailure("decryption failed")
        body, tag = data[:-32], data[-32:]
        # full tag and keystream computed before the comparison regardless of outcome
        expected = self._tag(key, nonce, aad, body)
        plain = bytes(a ^ b for a, b in zip(body, self._stream(key, nonce, len(body))))
        if not hmac.compare_digest(expected, tag):
            raise IntegrityFailure("decryption failed")
        return plain

    def _kdf(self, shared, context):
        return hashlib.sha256(b"navsec/pk" + shared + context).digest()


def backend_for(tag: int, seed: int | None = None) -> CryptoBackend:
    if tag == REAL_TAG:
        return RealBackend(seed)
    if tag == TEST_TAG:
        return TestBackend(0 if seed is None else seed)
    raise ValueError(f"unknown backend tag 0x{tag:02x}")


def make_backend(name: str, seed: int | None = None) -> CryptoBackend:
    if name == "real":
        return RealBackend(seed)
    if name == "test":
        return TestBackend(0 if seed is None else seed)
    raise ValueError(f"unknown backend {name!r}")
