"""Signing and content hashing for transaction evidence.

Two interchangeable schemes share one contract: Ed25519 for real
unforgeability, and an HMAC construction for high-volume simulation where
the adversary controls the message schedule, not the cryptography. All key
material derives deterministically from a seed so runs replay bit-exactly.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field
from functools import lru_cache

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ed25519


def content_hash(message: bytes) -> bytes:
    """256-bit digest used as a content reference."""
    return hashlib.sha256(message).digest()


@dataclass(frozen=True)
class KeyPair:
    public: bytes
    private: bytes = field(repr=False)  # never serialized into reports


@lru_cache(maxsize=4096)
def _ed25519_private(raw: bytes) -> ed25519.Ed25519PrivateKey:
    return ed25519.Ed25519PrivateKey.from_private_bytes(raw)


@lru_cache(maxsize=4096)
def _ed25519_public(raw: bytes) -> ed25519.Ed25519PublicKey:
    return ed25519.Ed25519PublicKey.from_public_bytes(raw)


class Ed25519Scheme:
    name = "ed25519"

    def keypair(self, seed: bytes) -> KeyPair:
        raw = hashlib.sha256(b"ed25519:" + seed).digest()
        key = _ed25519_private(raw)
        return KeyPair(public=key.public_key().public_bytes_raw(), private=raw)

    def sign(self, keys: KeyPair, message: bytes) -> bytes:
        return _ed25519_private(keys.private).sign(message)

    def verify(self, public: bytes, message: bytes, signature: bytes) -> bool:
        try:
            _ed25519_public(public).verify(signature, message)
        except (InvalidSignature, ValueError):
            return False
        return True


class HmacScheme:
    """Simulation-only scheme: the "public" key doubles as the MAC key.

    Anyone holding the directory could forge, which is fine here: the
    simulated adversary attacks ordering, never signatures.
    """

    name = "hmac"

    def keypair(self, seed: bytes) -> KeyPair:
        raw = hashlib.sha256(b"hmac:" + seed).digest()
        return KeyPair(public=raw, private=raw)

    def sign(self, keys: KeyPair, message: bytes) -> bytes:
        return hmac.new(keys.private, message, hashlib.sha256).digest()

    def verify(self, public: bytes, message: bytes, signature: bytes) -> bool:
        expect = hmac.new(public, message, hashlib.sha256).digest()
        return hmac.compare_digest(expect, signature)


_SCHEMES = {"ed25519": Ed25519Scheme(), "hmac": HmacScheme()}


def make_scheme(name: str):
    try:
        return _SCHEMES[name]
    except KeyError:
        raise ValueError(f"unknown signature scheme: {name!r}") from None


def keychain(n: int, scheme, seed: bytes) -> tuple[list[KeyPair], dict[int, bytes]]:
    """Deterministic per-process keys plus the public directory."""
    keys = []
    for pid in range(n):
        per = hashlib.sha256(seed + b"/" + pid.to_bytes(4, "big")).digest()
        keys.append(scheme.keypair(per))
    return keys, {pid: kp.public for pid, kp in enumerate(keys)}
