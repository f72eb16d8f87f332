"""Central issuer: signed coupon batches and the role-bound trust store.

The authority signs one coupon per eligible recipient; the coupon's
128-bit random identifier is the pseudonym that follows the recipient
through the whole workflow. The trust store is an explicit object handed
to every verifying operation so trust assumptions stay visible.
"""

from __future__ import annotations

import enum
import secrets
import threading
from pathlib import Path

from . import cardcodec, cryptokit
from .cardcodec import CardKind, CardMessage, CouponMessage, Envelope
from .errors import AttrCountMismatch, BadSignature, RoleConflict, UnknownKey, WrongKind, WrongRole


class Role(enum.Enum):
    AUTHORITY = "authority"
    CLINIC = "clinic"


class TrustStore:
    """Map key_id -> (public key, role). One role per key, forever."""

    def __init__(self) -> None:
        self._entries: dict[bytes, tuple[bytes, Role]] = {}
        self._lock = threading.Lock()

    def register(self, role: Role, public: bytes) -> None:
        """Idempotent for the same role; RoleConflict for a different one."""
        key_id = cryptokit.derive_key_id(public)
        with self._lock:
            existing = self._entries.get(key_id)
            if existing is not None and existing[1] is not role:
                raise RoleConflict(
                    f"key {key_id.hex()} already registered as {existing[1].value}"
                )
            self._entries[key_id] = (public, role)

    def lookup(self, key_id: bytes, expected_role: Role) -> bytes:
        entry = self._entries.get(key_id)
        if entry is None:
            raise UnknownKey(f"no trusted key with id {key_id.hex()}")
        public, role = entry
        if role is not expected_role:
            raise WrongRole(
                f"key {key_id.hex()} is registered as {role.value}, "
                f"not {expected_role.value}"
            )
        return public

    def verify_envelope(
        self, envelope: Envelope, expected_role: Role, expected_kind: CardKind
    ) -> CardMessage:
        """Check kind, key role, and signature; return the message."""
        if envelope.kind != expected_kind:
            raise WrongKind(
                f"expected a {expected_kind.name.lower()} card, got {envelope.kind.name.lower()}"
            )
        public = self.lookup(envelope.signer_key_id, expected_role)
        if not cardcodec.verify_envelope(envelope, public):
            raise BadSignature("envelope signature does not verify")
        return envelope.message

    def entries(self) -> list[tuple[bytes, bytes, Role]]:
        """(key_id, public, role) triples, sorted by key_id."""
        with self._lock:
            return sorted(
                (kid, pub, role) for kid, (pub, role) in self._entries.items()
            )

    def save(self, path: str | Path) -> None:
        lines = [
            f"{role.value},{kid.hex()},{pub.hex()}\n" for kid, pub, role in self.entries()
        ]
        Path(path).write_text("".join(lines), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TrustStore":
        store = cls()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            role_name, key_id_hex, public_hex = line.split(",")
            public = bytes.fromhex(public_hex)
            if cryptokit.derive_key_id(public) != bytes.fromhex(key_id_hex):
                raise ValueError(f"key_id mismatch in trust store line: {line}")
            store.register(Role(role_name), public)
        return store


def issue_coupon_batch(
    authority_key: cryptokit.SigningKeyPair,
    city: str,
    phase: str,
    attrs: list[tuple[str, str, bool]],
    total: int,
) -> list[Envelope]:
    """Sign `total` coupons numbered 1..total with fresh random identifiers.

    attrs carries one (age_band, job, comorbid) triple per coupon.
    """
    if len(attrs) != total:
        raise AttrCountMismatch(f"{len(attrs)} attribute rows for total={total}")
    seen_ids: set[str] = set()
    envelopes = []
    for number, (age_band, job, comorbid) in enumerate(attrs, start=1):
        coupon_id = secrets.token_hex(cardcodec.COUPON_ID_LEN)
        while coupon_id in seen_ids:
            coupon_id = secrets.token_hex(cardcodec.COUPON_ID_LEN)
        seen_ids.add(coupon_id)
        coupon = CouponMessage(
            coupon_id=coupon_id,
            number=number,
            total=total,
            city=city,
            phase=phase,
            age_band=age_band,
            job=job,
            comorbid=comorbid,
        )
        envelopes.append(cardcodec.sign_envelope(coupon, authority_key))
    return envelopes
