from __future__ import annotations

from dataclasses import dataclass

import pytest

import vaxcard as v


@pytest.fixture(scope="session")
def authority_key() -> v.SigningKeyPair:
    return v.SigningKeyPair.from_seed(bytes(range(32)))


@pytest.fixture(scope="session")
def clinic_key() -> v.SigningKeyPair:
    return v.SigningKeyPair.from_seed(bytes(range(32, 64)))


@pytest.fixture(scope="session")
def truststore(authority_key, clinic_key) -> v.TrustStore:
    store = v.TrustStore()
    store.register(v.Role.AUTHORITY, authority_key.public)
    store.register(v.Role.CLINIC, clinic_key.public)
    return store


@dataclass
class Identity:
    """One person's cards after dose 1 (and optionally dose 2)."""

    pii: v.PII
    coupon: v.CouponMessage
    coupon_env: v.Envelope
    badge_env: v.Envelope
    passkey_env: v.Envelope
    badge2_env: v.Envelope | None = None
    status_env: v.Envelope | None = None

    @property
    def passkey(self) -> v.PasskeyCard:
        message = self.passkey_env.message
        assert isinstance(message, v.PasskeyCard)
        return message


@pytest.fixture
def make_identity(authority_key, clinic_key, truststore):
    """Factory running one person through issuance, check-in, and dose 1
    (and dose 2 unless two_doses=False)."""

    counter = [0]

    def _make(
        name: str | None = None,
        dob: str = "1970-01-01",
        sex: str | None = "F",
        phase: str = "1B",
        manufacturer: str = "Pfizer",
        two_doses: bool = True,
        ledger: v.RedemptionLedger | None = None,
    ) -> Identity:
        counter[0] += 1
        seq = counter[0]
        ledger = ledger if ledger is not None else v.RedemptionLedger()
        pii = v.PII(name or f"Testperson Num{seq}", dob, sex)
        (coupon_env,) = v.issue_coupon_batch(
            authority_key, "Springfield", phase, [("30-39", "Teacher", False)], 1
        )
        coupon = v.check_in(coupon_env, truststore, ledger, {phase})
        badge_env, passkey_env = v.administer_first_dose(
            coupon,
            pii,
            v.DoseInfo(manufacturer, 1, "2021-01-01", f"LOT{seq:05d}"),
            clinic_key,
            clinic_name="Springfield General",
            location="Springfield",
            timestamp="2021-01-01T09:30:00Z",
            ledger=ledger,
        )
        identity = Identity(
            pii=pii,
            coupon=coupon,
            coupon_env=coupon_env,
            badge_env=badge_env,
            passkey_env=passkey_env,
        )
        if two_doses:
            identity.badge2_env, identity.status_env = v.administer_second_dose(
                badge_env,
                passkey_env,
                v.DoseInfo(manufacturer, 2, "2021-01-29", f"LOT{seq + 50000:05d}"),
                truststore,
                clinic_key,
                ledger,
            )
        return identity

    return _make
