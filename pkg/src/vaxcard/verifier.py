"""Third-party verification with three disclosure levels.

Status only: dose count, nothing else. Name: the holder hands over their
Passkey card and the verifier decrypts just the PII. Full record: Badge
plus Passkey yield dose history, clinic details, and PII. Each level
requires strictly more user-provided material, and the module keeps no
state at all, so nothing can be retained after a check.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import cardcodec, cryptokit
from .authority import Role, TrustStore
from .cardcodec import (
    BadgeMessage,
    CardKind,
    ClinicDetails,
    DoseInfo,
    Envelope,
    PII,
    PasskeyCard,
    StatusMessage,
)
from .clinic import _open_passkey_pii
from .errors import CommitmentMismatch, DecryptFailed, MalformedPayload, WrongKind


class DisclosureLevel(enum.Enum):
    STATUS_ONLY = 1
    NAME_VERIFIED = 2
    FULL_RECORD = 3


@dataclass
class FullRecord:
    pii: PII
    doses: list[DoseInfo]
    details: ClinicDetails


@dataclass
class DisclosureResult:
    level: DisclosureLevel
    doses_received: int
    name: str | None = None
    full: FullRecord | None = None

    def __post_init__(self) -> None:
        if (self.name is not None) != (self.level != DisclosureLevel.STATUS_ONLY):
            raise ValueError("name is present iff level is above status-only")
        if (self.full is not None) != (self.level == DisclosureLevel.FULL_RECORD):
            raise ValueError("full record is present iff level is full-record")


def _extract_passkey(passkey_env: Envelope) -> PasskeyCard:
    if passkey_env.kind != CardKind.PASSKEY:
        raise WrongKind(
            f"expected a passkey card, got {passkey_env.kind.name.lower()}"
        )
    message = passkey_env.message
    assert isinstance(message, PasskeyCard)
    return message


def verify_status(status_env: Envelope, store: TrustStore) -> DisclosureResult:
    """Check the Status signature; reveal the dose count and nothing else."""
    status = store.verify_envelope(status_env, Role.CLINIC, CardKind.STATUS)
    assert isinstance(status, StatusMessage)
    return DisclosureResult(
        level=DisclosureLevel.STATUS_ONLY, doses_received=status.doses_received
    )


def disclose_name(
    status_env: Envelope,
    passkey_env: Envelope,
    coupon_id: str,
    store: TrustStore,
) -> DisclosureResult:
    """Decrypt the holder's name from their Passkey and bind it to the Status.

    coupon_id is the holder's card identifier, needed as associated data to
    open the sealed PII. The commitment equality proves the passkey belongs
    to this Status.
    """
    base = verify_status(status_env, store)
    status = status_env.message
    assert isinstance(status, StatusMessage)
    passkey = _extract_passkey(passkey_env)
    try:
        bytes.fromhex(coupon_id)
    except ValueError:
        raise MalformedPayload("coupon_id must be hex") from None
    pii = _open_passkey_pii(passkey, coupon_id)
    if cryptokit.commit_passkey(pii, passkey.salt) != status.passkey_commitment:
        raise CommitmentMismatch("passkey does not belong to this status")
    return DisclosureResult(
        level=DisclosureLevel.NAME_VERIFIED,
        doses_received=base.doses_received,
        name=pii.name,
    )


def disclose_full(
    badge_env: Envelope, passkey_env: Envelope, store: TrustStore
) -> DisclosureResult:
    """Open the whole record: dose history, clinic details, PII.

    A passkey that does not open under the badge's coupon binding belongs
    to a different card, so that failure is a CommitmentMismatch;
    DecryptFailed is reserved for a sealed-details box that will not open
    once the passkey has already been proven to match.
    """
    badge = store.verify_envelope(badge_env, Role.CLINIC, CardKind.BADGE)
    assert isinstance(badge, BadgeMessage)
    passkey = _extract_passkey(passkey_env)
    try:
        pii = _open_passkey_pii(passkey, badge.coupon_id)
    except DecryptFailed:
        raise CommitmentMismatch("passkey does not belong to this badge") from None
    if cryptokit.commit_passkey(pii, passkey.salt) != badge.passkey_commitment:
        raise CommitmentMismatch("passkey commitment does not match the badge")
    details_bytes = cryptokit.unseal(
        passkey.key, badge.sealed_details, bytes.fromhex(badge.coupon_id)
    )
    try:
        details = cardcodec.decode_clinic_details(details_bytes)
    except MalformedPayload as exc:
        raise DecryptFailed(f"sealed details opened to garbage: {exc}") from None
    return DisclosureResult(
        level=DisclosureLevel.FULL_RECORD,
        doses_received=len(badge.doses),
        name=pii.name,
        full=FullRecord(pii=pii, doses=list(badge.doses), details=details),
    )
