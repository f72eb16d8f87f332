"""Vaccination-site workflow: check-in, first dose, second dose.

The redemption ledger is the double-spend guard. Coupon states only move
forward (absent -> CheckedIn -> Dosed1 -> Dosed2) and every transition is
a single atomic check-and-set under the ledger lock, so concurrent
check-ins of one coupon admit exactly one winner.

First dose: the clinic mints a fresh symmetric key and salt, seals the
PII and the clinic details under that key (associated data = the coupon
identifier, tying both boxes to the card), and hands everything back on
the Badge and Passkey cards. Nothing derived from the key or salt is
retained here; once the function returns, only the card holder has them.
"""

from __future__ import annotations

import enum
import threading
from datetime import datetime, timezone
from pathlib import Path

from . import cardcodec, cryptokit
from .authority import Role, TrustStore
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
)
from .errors import (
    AlreadyRedeemed,
    DecryptFailed,
    IdentityMismatch,
    MalformedPayload,
    ManufacturerMismatch,
    NotCheckedIn,
    NotDosed1,
    PhaseNotActive,
    WrongDoseNumber,
    WrongKind,
)


class LedgerState(enum.Enum):
    CHECKED_IN = "CheckedIn"
    DOSED1 = "Dosed1"
    DOSED2 = "Dosed2"


class RedemptionLedger:
    """Forward-only coupon state map with an append-only event log."""

    def __init__(self, log_path: str | Path | None = None) -> None:
        self._states: dict[str, LedgerState] = {}
        self._lock = threading.Lock()
        self._log_path = Path(log_path) if log_path is not None else None

    def state(self, coupon_id: str) -> LedgerState | None:
        with self._lock:
            return self._states.get(coupon_id)

    def states(self) -> dict[str, LedgerState]:
        with self._lock:
            return dict(self._states)

    def _append_log(self, coupon_id: str, new_state: LedgerState) -> None:
        if self._log_path is None:
            return
        stamp = datetime.now(timezone.utc).replace(tzinfo=None).isoformat(timespec="seconds")
        with self._log_path.open("a", encoding="utf-8") as fh:
            fh.write(f"{stamp}Z,{coupon_id},{new_state.value}\n")

    def mark_checked_in(self, coupon_id: str) -> None:
        with self._lock:
            if coupon_id in self._states:
                raise AlreadyRedeemed(f"coupon {coupon_id} already used")
            self._states[coupon_id] = LedgerState.CHECKED_IN
            self._append_log(coupon_id, LedgerState.CHECKED_IN)

    def mark_dosed1(self, coupon_id: str) -> None:
        with self._lock:
            if self._states.get(coupon_id) is not LedgerState.CHECKED_IN:
                raise NotCheckedIn(f"coupon {coupon_id} is not checked in")
            self._states[coupon_id] = LedgerState.DOSED1
            self._append_log(coupon_id, LedgerState.DOSED1)

    def mark_dosed2(self, coupon_id: str) -> None:
        with self._lock:
            if self._states.get(coupon_id) is not LedgerState.DOSED1:
                raise NotDosed1(f"coupon {coupon_id} has not received dose 1")
            self._states[coupon_id] = LedgerState.DOSED2
            self._append_log(coupon_id, LedgerState.DOSED2)

    @classmethod
    def load(cls, log_path: str | Path) -> "RedemptionLedger":
        """Rebuild state by replaying the event log."""
        ledger = cls()
        order = {
            LedgerState.CHECKED_IN: 0,
            LedgerState.DOSED1: 1,
            LedgerState.DOSED2: 2,
        }
        path = Path(log_path)
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line:
                    continue
                _, coupon_id, state_name = line.split(",")
                new_state = LedgerState(state_name)
                prev = ledger._states.get(coupon_id)
                if prev is not None and order[new_state] != order[prev] + 1:
                    raise ValueError(f"non-monotonic ledger log at: {line}")
                if prev is None and new_state is not LedgerState.CHECKED_IN:
                    raise ValueError(f"ledger log skips check-in at: {line}")
                ledger._states[coupon_id] = new_state
        ledger._log_path = path
        return ledger


def check_in(
    coupon_env: Envelope,
    store: TrustStore,
    ledger: RedemptionLedger,
    active_phases: set[str],
) -> CouponMessage:
    """Verify a coupon and atomically mark it used.

    Signature and phase checks come first so that nothing unauthentic ever
    reaches the ledger; the ledger mark is the single atomic step.
    """
    coupon = store.verify_envelope(coupon_env, Role.AUTHORITY, CardKind.COUPON)
    assert isinstance(coupon, CouponMessage)
    if coupon.phase not in active_phases:
        raise PhaseNotActive(f"phase {coupon.phase!r} is not being vaccinated")
    ledger.mark_checked_in(coupon.coupon_id)
    return coupon


def administer_first_dose(
    coupon: CouponMessage,
    pii: PII,
    dose: DoseInfo,
    clinic_key: cryptokit.SigningKeyPair,
    clinic_name: str,
    location: str,
    timestamp: datetime | str,
    ledger: RedemptionLedger,
) -> tuple[Envelope, Envelope]:
    """Record dose 1 and mint the Badge and Passkey cards.

    The symmetric key and salt live only in this call frame and in the
    returned Passkey card.
    """
    if dose.dose_number != 1:
        raise WrongDoseNumber(f"first dose must be dose 1, got {dose.dose_number}")
    ledger.mark_dosed1(coupon.coupon_id)

    key = cryptokit.new_symmetric_key()
    salt = cryptokit.new_salt()
    coupon_id_bytes = bytes.fromhex(coupon.coupon_id)
    details = ClinicDetails(
        clinic_name=clinic_name, location=location, timestamp=cardcodec.to_utc_iso(timestamp)
    )
    badge = BadgeMessage(
        coupon_id=coupon.coupon_id,
        doses=[dose],
        passkey_commitment=cryptokit.commit_passkey(pii, salt),
        sealed_details=cryptokit.seal(
            key, cardcodec.encode_clinic_details(details), coupon_id_bytes
        ),
    )
    passkey = PasskeyCard(
        key=key,
        salt=salt,
        sealed_pii=cryptokit.seal(key, cardcodec.encode_pii(pii), coupon_id_bytes),
    )
    return (
        cardcodec.sign_envelope(badge, clinic_key),
        cardcodec.sign_envelope(passkey, clinic_key),
    )


def _open_passkey_pii(passkey: PasskeyCard, coupon_id: str) -> PII:
    pii_bytes = cryptokit.unseal(
        passkey.key, passkey.sealed_pii, bytes.fromhex(coupon_id)
    )
    try:
        return cardcodec.decode_pii(pii_bytes)
    except MalformedPayload as exc:
        raise DecryptFailed(f"passkey opened to garbage: {exc}") from None


def confirm_identity(badge: BadgeMessage, passkey: PasskeyCard) -> PII:
    """Check that a passkey belongs to a badge via the commitment.

    A passkey that does not open under the badge's coupon binding provably
    belongs to a different card, which is the same identity failure as a
    commitment mismatch (an AEAD failure cannot be split into wrong-binding
    and tampering cases).
    """
    try:
        pii = _open_passkey_pii(passkey, badge.coupon_id)
    except DecryptFailed:
        raise IdentityMismatch("passkey does not belong to this badge") from None
    if cryptokit.commit_passkey(pii, passkey.salt) != badge.passkey_commitment:
        raise IdentityMismatch("passkey commitment does not match the badge")
    return pii


def administer_second_dose(
    badge_env: Envelope,
    passkey_env: Envelope,
    dose: DoseInfo,
    store: TrustStore,
    clinic_key: cryptokit.SigningKeyPair,
    ledger: RedemptionLedger,
) -> tuple[Envelope, Envelope]:
    """Verify badge and identity, record dose 2, reissue Badge, mint Status.

    The reissued badge keeps the original sealed details box; the second
    dose itself is carried in the dose list.
    """
    badge = store.verify_envelope(badge_env, Role.CLINIC, CardKind.BADGE)
    assert isinstance(badge, BadgeMessage)
    if passkey_env.kind != CardKind.PASSKEY:
        raise WrongKind(f"expected a passkey card, got {passkey_env.kind.name.lower()}")
    passkey = passkey_env.message
    assert isinstance(passkey, PasskeyCard)

    if dose.dose_number != 2:
        raise WrongDoseNumber(f"second dose must be dose 2, got {dose.dose_number}")
    if dose.manufacturer != badge.doses[0].manufacturer:
        raise ManufacturerMismatch(
            f"first dose was {badge.doses[0].manufacturer}, not {dose.manufacturer}"
        )
    confirm_identity(badge, passkey)
    ledger.mark_dosed2(badge.coupon_id)

    full_badge = BadgeMessage(
        coupon_id=badge.coupon_id,
        doses=badge.doses + [dose],
        passkey_commitment=badge.passkey_commitment,
        sealed_details=badge.sealed_details,
    )
    status = StatusMessage(
        doses_received=2, passkey_commitment=badge.passkey_commitment
    )
    return (
        cardcodec.sign_envelope(full_badge, clinic_key),
        cardcodec.sign_envelope(status, clinic_key),
    )
