"""Signed QR-card protocol: issuance, administration, verification, registry."""

from .authority import Role, TrustStore, issue_coupon_batch
from .cardcodec import (
    BadgeMessage,
    CardKind,
    ClinicDetails,
    CouponMessage,
    DoseInfo,
    Envelope,
    PII,
    PasskeyCard,
    StatusMessage,
    canonical_decode,
    canonical_encode,
    from_card_text,
    sign_envelope,
    to_card_text,
)
from .clinic import (
    LedgerState,
    RedemptionLedger,
    administer_first_dose,
    administer_second_dose,
    check_in,
)
from .cryptokit import (
    Commitment,
    Salt,
    SealedBox,
    SigningKeyPair,
    SymmetricKey,
    commit_passkey,
    generate_signing_keypair,
    seal,
    sign,
    unseal,
    verify,
)
from .errors import ProtocolError
from .registry import AggregateView, Registry, RegistryRecord, SymptomReport
from .verifier import (
    DisclosureLevel,
    DisclosureResult,
    disclose_full,
    disclose_name,
    verify_status,
)

__all__ = [
    "AggregateView",
    "BadgeMessage",
    "CardKind",
    "ClinicDetails",
    "Commitment",
    "CouponMessage",
    "DisclosureLevel",
    "DisclosureResult",
    "DoseInfo",
    "Envelope",
    "LedgerState",
    "PII",
    "PasskeyCard",
    "ProtocolError",
    "RedemptionLedger",
    "Registry",
    "RegistryRecord",
    "Role",
    "Salt",
    "SealedBox",
    "SigningKeyPair",
    "StatusMessage",
    "SymmetricKey",
    "SymptomReport",
    "TrustStore",
    "administer_first_dose",
    "administer_second_dose",
    "canonical_decode",
    "canonical_encode",
    "check_in",
    "commit_passkey",
    "disclose_full",
    "disclose_name",
    "from_card_text",
    "generate_signing_keypair",
    "issue_coupon_batch",
    "seal",
    "sign",
    "sign_envelope",
    "to_card_text",
    "unseal",
    "verify",
    "verify_status",
]
