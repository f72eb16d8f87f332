from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor

import pytest

import vaxcard as v
from vaxcard import cardcodec, cryptokit
from vaxcard.errors import (
    AlreadyRedeemed,
    BadSignature,
    IdentityMismatch,
    ManufacturerMismatch,
    NotCheckedIn,
    NotDosed1,
    PhaseNotActive,
    UnknownKey,
    WrongDoseNumber,
)


def issue_one(authority_key, phase="1B"):
    (envelope,) = v.issue_coupon_batch(
        authority_key, "Springfield", phase, [("30-39", "Teacher", False)], 1
    )
    return envelope


# -- check-in ------------------------------------------------------------------


def test_fresh_coupon_checks_in(authority_key, truststore):
    ledger = v.RedemptionLedger()
    coupon = v.check_in(issue_one(authority_key), truststore, ledger, {"1B"})
    assert ledger.state(coupon.coupon_id) == v.LedgerState.CHECKED_IN


def test_second_presentation_is_already_redeemed(authority_key, truststore):
    ledger = v.RedemptionLedger()
    envelope = issue_one(authority_key)
    v.check_in(envelope, truststore, ledger, {"1B"})
    with pytest.raises(AlreadyRedeemed):
        v.check_in(envelope, truststore, ledger, {"1B"})


def test_inactive_phase_is_rejected(authority_key, truststore):
    ledger = v.RedemptionLedger()
    envelope = issue_one(authority_key, phase="2")
    with pytest.raises(PhaseNotActive):
        v.check_in(envelope, truststore, ledger, {"1B"})
    assert ledger.states() == {}


def test_tampered_coupon_is_rejected_before_the_ledger(authority_key, truststore):
    envelope = issue_one(authority_key)
    message = envelope.message
    message.city = "Shelbyville"  # signature now stale
    ledger = v.RedemptionLedger()
    with pytest.raises(BadSignature):
        v.check_in(envelope, truststore, ledger, {"1B"})
    assert ledger.states() == {}


def test_coupon_from_unknown_issuer_is_rejected(truststore):
    rogue = v.generate_signing_keypair()
    envelope = issue_one(rogue)
    with pytest.raises(UnknownKey):
        v.check_in(envelope, truststore, v.RedemptionLedger(), {"1B"})


def test_concurrent_checkins_admit_exactly_one(authority_key, truststore):
    envelope = issue_one(authority_key)
    ledger = v.RedemptionLedger()
    barrier = threading.Barrier(100)
    outcomes: list[str] = []

    def attempt():
        barrier.wait()
        try:
            v.check_in(envelope, truststore, ledger, {"1B"})
            return "ok"
        except AlreadyRedeemed:
            return "dup"

    with ThreadPoolExecutor(max_workers=100) as pool:
        outcomes = [f.result() for f in [pool.submit(attempt) for _ in range(100)]]
    assert outcomes.count("ok") == 1
    assert outcomes.count("dup") == 99


# -- first dose ------------------------------------------------------------------


def test_first_dose_badge_matches_documented_example(make_identity):
    identity = make_identity(two_doses=False)
    badge = identity.badge_env.message
    assert isinstance(badge, v.BadgeMessage)
    dose = badge.doses[0]
    assert (dose.manufacturer, dose.dose_number) == ("Pfizer", 1)
    assert dose.date == cardcodec.normalize_date("1/1/2021") == "2021-01-01"
    assert badge.coupon_id == identity.coupon.coupon_id


def test_first_dose_without_checkin(authority_key, clinic_key):
    envelope = issue_one(authority_key)
    with pytest.raises(NotCheckedIn):
        v.administer_first_dose(
            envelope.message,
            v.PII("Jane Roe", "1980-05-05"),
            v.DoseInfo("Pfizer", 1, "2021-01-01", "EL1"),
            clinic_key,
            "Clinic",
            "Springfield",
            "2021-01-01T08:00:00Z",
            v.RedemptionLedger(),
        )


def test_first_dose_with_dose_number_2(make_identity, clinic_key, authority_key, truststore):
    ledger = v.RedemptionLedger()
    envelope = issue_one(authority_key)
    coupon = v.check_in(envelope, truststore, ledger, {"1B"})
    with pytest.raises(WrongDoseNumber):
        v.administer_first_dose(
            coupon,
            v.PII("Jane Roe", "1980-05-05"),
            v.DoseInfo("Pfizer", 2, "2021-01-01", "EL1"),
            clinic_key,
            "Clinic",
            "Springfield",
            "2021-01-01T08:00:00Z",
            ledger,
        )


def test_sealed_details_open_to_the_exact_inputs(make_identity):
    identity = make_identity(two_doses=False)
    badge = identity.badge_env.message
    plaintext = cryptokit.unseal(
        identity.passkey.key,
        badge.sealed_details,
        bytes.fromhex(badge.coupon_id),
    )
    details = cardcodec.decode_clinic_details(plaintext)
    assert details.clinic_name == "Springfield General"
    assert details.location == "Springfield"
    assert details.timestamp == "2021-01-01T09:30:00Z"


def test_passkey_commitment_chain_binds_badge_and_status(make_identity):
    identity = make_identity()
    badge = identity.badge2_env.message
    status = identity.status_env.message
    pii_bytes = cryptokit.unseal(
        identity.passkey.key,
        identity.passkey.sealed_pii,
        bytes.fromhex(badge.coupon_id),
    )
    pii = cardcodec.decode_pii(pii_bytes)
    recomputed = v.commit_passkey(pii, identity.passkey.salt)
    assert badge.passkey_commitment == recomputed
    assert status.passkey_commitment == recomputed


# -- second dose -----------------------------------------------------------------


def test_second_dose_issues_status_and_full_badge(make_identity, truststore):
    identity = make_identity()
    status = identity.status_env.message
    assert status.doses_received == 2
    badge = identity.badge2_env.message
    assert [d.dose_number for d in badge.doses] == [1, 2]
    assert badge.sealed_details == identity.badge_env.message.sealed_details


def test_crossed_passkey_is_identity_mismatch(make_identity, truststore, clinic_key):
    ledger = v.RedemptionLedger()
    a = make_identity(two_doses=False, ledger=ledger)
    b = make_identity(two_doses=False, ledger=ledger)
    with pytest.raises(IdentityMismatch):
        v.administer_second_dose(
            a.badge_env,
            b.passkey_env,
            v.DoseInfo("Pfizer", 2, "2021-01-29", "EL2"),
            truststore,
            clinic_key,
            ledger,
        )


def test_manufacturer_must_match_first_dose(make_identity, truststore, clinic_key):
    ledger = v.RedemptionLedger()
    identity = make_identity(two_doses=False, ledger=ledger)
    with pytest.raises(ManufacturerMismatch):
        v.administer_second_dose(
            identity.badge_env,
            identity.passkey_env,
            v.DoseInfo("Moderna", 2, "2021-01-29", "MO1"),
            truststore,
            clinic_key,
            ledger,
        )


def test_second_dose_twice_is_not_dosed1(make_identity, truststore, clinic_key):
    ledger = v.RedemptionLedger()
    identity = make_identity(ledger=ledger)
    with pytest.raises(NotDosed1):
        v.administer_second_dose(
            identity.badge_env,
            identity.passkey_env,
            v.DoseInfo("Pfizer", 2, "2021-02-15", "EL9"),
            truststore,
            clinic_key,
            ledger,
        )


def test_badge_from_unregistered_clinic_is_rejected(
    make_identity, authority_key, truststore, clinic_key
):
    ledger = v.RedemptionLedger()
    identity = make_identity(two_doses=False, ledger=ledger)
    rogue = v.generate_signing_keypair()
    forged = cardcodec.sign_envelope(identity.badge_env.message, rogue)
    with pytest.raises(UnknownKey):
        v.administer_second_dose(
            forged,
            identity.passkey_env,
            v.DoseInfo("Pfizer", 2, "2021-01-29", "EL2"),
            truststore,
            clinic_key,
            ledger,
        )


# -- ledger ----------------------------------------------------------------------


def test_ledger_event_log_replay_reproduces_state(tmp_path, make_identity):
    log_path = tmp_path / "ledger.log"
    ledger = v.RedemptionLedger(log_path)
    make_identity(ledger=ledger)
    make_identity(two_doses=False, ledger=ledger)
    replayed = v.RedemptionLedger.load(log_path)
    assert replayed.states() == ledger.states()
    states = list(ledger.states().values())
    assert states.count(v.LedgerState.DOSED2) == 1
    assert states.count(v.LedgerState.DOSED1) == 1
    for line in log_path.read_text().splitlines():
        stamp, coupon_id, state = line.split(",")
        assert state in ("CheckedIn", "Dosed1", "Dosed2")
        assert len(coupon_id) == 32


def test_ledger_transitions_never_move_backward():
    ledger = v.RedemptionLedger()
    ledger.mark_checked_in("ab" * 16)
    ledger.mark_dosed1("ab" * 16)
    with pytest.raises(NotCheckedIn):
        ledger.mark_dosed1("ab" * 16)
    ledger.mark_dosed2("ab" * 16)
    with pytest.raises(NotDosed1):
        ledger.mark_dosed2("ab" * 16)
    with pytest.raises(AlreadyRedeemed):
        ledger.mark_checked_in("ab" * 16)
    assert ledger.state("ab" * 16) == v.LedgerState.DOSED2


def test_replay_rejects_corrupt_nonmonotonic_log(tmp_path):
    log_path = tmp_path / "bad.log"
    log_path.write_text(
        "2021-01-01T00:00:00Z,{0},CheckedIn\n"
        "2021-01-01T00:01:00Z,{0},Dosed2\n".format("cd" * 16)
    )
    with pytest.raises(ValueError):
        v.RedemptionLedger.load(log_path)


def test_clinic_state_retains_no_passkey_key_or_salt(tmp_path, authority_key, clinic_key, truststore):
    log_path = tmp_path / "ledger.log"
    trust_path = tmp_path / "trust.txt"
    truststore.save(trust_path)
    ledger = v.RedemptionLedger(log_path)
    envelope = issue_one(authority_key)
    coupon = v.check_in(envelope, truststore, ledger, {"1B"})
    _, passkey_env = v.administer_first_dose(
        coupon,
        v.PII("Amnesia Probe", "1975-03-03"),
        v.DoseInfo("Pfizer", 1, "2021-01-01", "EL1"),
        clinic_key,
        "Clinic",
        "Springfield",
        "2021-01-01T08:00:00Z",
        ledger,
    )
    passkey = passkey_env.message
    clinic_state = b"".join(
        [
            log_path.read_bytes(),
            trust_path.read_bytes(),
            repr(ledger.states()).encode(),
            clinic_key.secret,  # clinic's own key is fine; passkey material is not
        ]
    )
    for secret in (passkey.key.bytes, passkey.salt.bytes):
        assert secret not in clinic_state
        assert secret.hex().encode() not in clinic_state
