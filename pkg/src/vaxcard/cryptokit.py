"""Cryptographic primitives for the card protocol.

Ed25519 for envelope signatures, SHA-256 for key identifiers and the
passkey commitment, ChaCha20-Poly1305 for the sealed boxes that hold PII
and clinic details. Key identifiers are the first 8 bytes of SHA-256 over
the raw public key.

The passkey commitment binds Badge and Status to one person without
revealing identity: SHA-256 over name, date of birth, and sex joined by
0x1F unit separators, followed by a 16-byte random salt. The separator
prevents concatenation ambiguity between adjacent fields.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from .errors import DecryptFailed, RandomnessUnavailable

if TYPE_CHECKING:
    from .cardcodec import PII

SALT_LEN = 16
KEY_LEN = 32
NONCE_LEN = 12
TAG_LEN = 16
KEY_ID_LEN = 8
SIGNATURE_LEN = 64
COMMITMENT_LEN = 32

_SEP = b"\x1f"


def _random_bytes(n: int) -> bytes:
    try:
        return os.urandom(n)
    except OSError as exc:
        raise RandomnessUnavailable(str(exc)) from exc


@dataclass(frozen=True)
class Salt:
    bytes: bytes

    def __post_init__(self) -> None:
        if len(self.bytes) != SALT_LEN:
            raise ValueError(f"salt must be {SALT_LEN} bytes")


@dataclass(frozen=True)
class SymmetricKey:
    bytes: bytes

    def __post_init__(self) -> None:
        if len(self.bytes) != KEY_LEN:
            raise ValueError(f"symmetric key must be {KEY_LEN} bytes")


@dataclass(frozen=True)
class Commitment:
    digest: bytes

    def __post_init__(self) -> None:
        if len(self.digest) != COMMITMENT_LEN:
            raise ValueError(f"commitment must be {COMMITMENT_LEN} bytes")


@dataclass(frozen=True)
class SealedBox:
    """AEAD output: 12-byte nonce plus ciphertext with a 16-byte tag."""

    nonce: bytes
    ciphertext: bytes

    def __post_init__(self) -> None:
        if len(self.nonce) != NONCE_LEN:
            raise ValueError(f"nonce must be {NONCE_LEN} bytes")
        if len(self.ciphertext) < TAG_LEN:
            raise ValueError("ciphertext shorter than the authentication tag")


@dataclass(frozen=True)
class SigningKeyPair:
    """Ed25519 pair. The secret seed is never serialized into any card."""

    secret: bytes = field(repr=False)
    public: bytes
    key_id: bytes

    def __post_init__(self) -> None:
        if len(self.secret) != 32 or len(self.public) != 32:
            raise ValueError("Ed25519 seed and public key must be 32 bytes")
        if self.key_id != derive_key_id(self.public):
            raise ValueError("key_id does not match the public key")

    @classmethod
    def from_seed(cls, seed: bytes) -> "SigningKeyPair":
        priv = Ed25519PrivateKey.from_private_bytes(seed)
        public = priv.public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )
        return cls(secret=seed, public=public, key_id=derive_key_id(public))


def derive_key_id(public: bytes) -> bytes:
    return hashlib.sha256(public).digest()[:KEY_ID_LEN]


def generate_signing_keypair() -> SigningKeyPair:
    return SigningKeyPair.from_seed(_random_bytes(32))


def new_salt() -> Salt:
    return Salt(_random_bytes(SALT_LEN))


def new_symmetric_key() -> SymmetricKey:
    return SymmetricKey(_random_bytes(KEY_LEN))


def sign(key: SigningKeyPair, data: bytes) -> bytes:
    """Deterministic Ed25519 signature over data."""
    return Ed25519PrivateKey.from_private_bytes(key.secret).sign(data)


def verify(public: bytes, data: bytes, signature: bytes) -> bool:
    """True iff signature is valid for data under public.

    Malformed keys or signatures return False rather than raising.
    """
    try:
        Ed25519PublicKey.from_public_bytes(public).verify(signature, data)
        return True
    except (InvalidSignature, ValueError, TypeError):
        return False


def commit_passkey(pii: "PII", salt: Salt) -> Commitment:
    """Salted hash binding a Badge/Status to one person's PII."""
    preimage = (
        pii.name.encode("utf-8")
        + _SEP
        + pii.dob.encode("utf-8")
        + _SEP
        + (pii.sex or "").encode("utf-8")
        + _SEP
        + salt.bytes
    )
    return Commitment(hashlib.sha256(preimage).digest())


def seal(key: SymmetricKey, plaintext: bytes, associated_data: bytes) -> SealedBox:
    """Encrypt under a fresh random nonce, binding associated_data into the tag."""
    nonce = _random_bytes(NONCE_LEN)
    ciphertext = ChaCha20Poly1305(key.bytes).encrypt(nonce, plaintext, associated_data)
    return SealedBox(nonce=nonce, ciphertext=ciphertext)


def unseal(key: SymmetricKey, box: SealedBox, associated_data: bytes) -> bytes:
    """Decrypt a sealed box.

    Raises DecryptFailed on a wrong key, tampered ciphertext, or wrong
    associated data; the three cases are indistinguishable by design.
    """
    try:
        return ChaCha20Poly1305(key.bytes).decrypt(
            box.nonce, box.ciphertext, associated_data
        )
    except Exception as exc:
        raise DecryptFailed("sealed box did not open") from exc
