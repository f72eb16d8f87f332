"""Acceptance suite: one test per release criterion.

Each test prints one `ACCEPTANCE <criterion>: PASS` line (visible with
pytest -s; a failure shows up as the test's own FAILED line). The
end-to-end scenario runs over live HTTP against a file-backed gateway so
the anonymity criterion can scan exactly what a deployment would persist.
"""

from __future__ import annotations

import http.client
import json
import logging
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import pytest

import vaxcard as v
from vaxcard import cardcodec, clinic, cryptokit
from vaxcard.errors import (
    AlreadyRedeemed,
    BadBase45,
    BadPrefix,
    CommitmentMismatch,
    MalformedPayload,
    ProtocolError,
)
from vaxcard.gateway.config import load_config, save_keypair
from vaxcard.gateway.server import GatewayServer

from oracles import ref_count_by


def _announce(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


def _post(host: str, port: int, path: str, payload: dict) -> tuple[int, dict]:
    conn = http.client.HTTPConnection(host, port, timeout=10)
    conn.request(
        "POST", path, body=json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"},
    )
    response = conn.getresponse()
    data = json.loads(response.read().decode())
    conn.close()
    return response.status, data


class _LogCapture(logging.Handler):
    def __init__(self) -> None:
        super().__init__()
        self.lines: list[str] = []

    def emit(self, record: logging.LogRecord) -> None:
        self.lines.append(record.getMessage())


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    """Issue 50 coupons; run 10 people through both doses over live HTTP."""
    tmp_path = tmp_path_factory.mktemp("scenario")
    authority_key = v.generate_signing_keypair()
    clinic_key = v.generate_signing_keypair()
    store = v.TrustStore()
    store.register(v.Role.AUTHORITY, authority_key.public)
    store.register(v.Role.CLINIC, clinic_key.public)
    store.save(tmp_path / "trust.txt")
    save_keypair(tmp_path / "clinic.keys", v.Role.CLINIC, clinic_key)
    config_path = tmp_path / "gateway.conf"
    config_path.write_text(
        "listen_address=127.0.0.1:0\n"
        f"keystore_path={tmp_path / 'clinic.keys'}\n"
        f"ledger_path={tmp_path / 'ledger.log'}\n"
        f"registry_path={tmp_path / 'registry.ndjson'}\n"
        f"truststore_path={tmp_path / 'trust.txt'}\n"
        "active_phases=1B\n"
    )
    capture = _LogCapture()
    logger = logging.getLogger("vaxcard.gateway")
    logger.addHandler(capture)
    logger.setLevel(logging.INFO)
    server = GatewayServer(load_config(config_path))
    threading.Thread(target=server.serve_forever, daemon=True).start()
    host, port = server.address

    started = time.perf_counter()
    batch = v.issue_coupon_batch(
        authority_key, "Springfield", "1B", [("30-39", "Teacher", False)] * 50, 50
    )
    people = []
    for i in range(10):
        name = f"Scenariofolk Xq{i}ward"
        dob = f"19{60 + i}-0{1 + i % 9}-1{i}"
        coupon_text = v.to_card_text(batch[i])
        status, checkin = _post(host, port, "/api/checkin", {"card_text": coupon_text})
        assert status == 200, checkin
        status, dose1 = _post(
            host, port, "/api/dose1",
            {
                "card_text": coupon_text,
                "pii": {"name": name, "dob": dob, "sex": "F" if i % 2 else "M"},
                "dose": {
                    "manufacturer": "Pfizer" if i % 2 else "Moderna",
                    "dose_number": 1,
                    "date": "2021-01-01",
                    "lot": f"EL{i:04d}",
                },
                "clinic": {
                    "clinic_name": "Springfield General",
                    "location": "Springfield",
                    "timestamp": "2021-01-01T09:30:00Z",
                },
            },
        )
        assert status == 200, dose1
        status, dose2 = _post(
            host, port, "/api/dose2",
            {
                "badge_card_text": dose1["badge_card_text"],
                "passkey_card_text": dose1["passkey_card_text"],
                "dose": {
                    "manufacturer": "Pfizer" if i % 2 else "Moderna",
                    "dose_number": 2,
                    "date": "2021-01-29",
                    "lot": f"EL{i + 100:04d}",
                },
            },
        )
        assert status == 200, dose2
        for dose_number, date in ((1, "2021-01-01"), (2, "2021-01-29")):
            status, ack = _post(
                host, port, "/api/registry/record",
                {
                    "pseudo_id": checkin["coupon_id"],
                    "city": "Springfield",
                    "phase": "1B",
                    "manufacturer": "Pfizer" if i % 2 else "Moderna",
                    "dose_number": dose_number,
                    "date": date,
                },
            )
            assert status == 200, ack
        status, ack = _post(
            host, port, "/api/registry/symptom",
            {
                "pseudo_id": checkin["coupon_id"],
                "days_since_dose": 1,
                "symptoms": ["sore arm"],
                "severity": 1 + i % 5,
            },
        )
        assert status == 200, ack
        passkey_env = v.from_card_text(dose1["passkey_card_text"])
        people.append(
            {
                "name": name,
                "dob": dob,
                "coupon_id": checkin["coupon_id"],
                "status_text": dose2["status_card_text"],
                "passkey_key": passkey_env.message.key.bytes,
                "passkey_salt": passkey_env.message.salt.bytes,
            }
        )

    verified = []
    for person in people:
        status, payload = _post(
            host, port, "/api/verify/status", {"card_text": person["status_text"]}
        )
        assert status == 200, payload
        verified.append(payload["doses_received"])
    elapsed = time.perf_counter() - started

    yield {
        "people": people,
        "verified": verified,
        "elapsed": elapsed,
        "ledger_path": tmp_path / "ledger.log",
        "registry_path": tmp_path / "registry.ndjson",
        "log_lines": capture.lines,
    }

    server.shutdown()
    logger.removeHandler(capture)


def test_end_to_end_scenario(scenario):
    assert scenario["verified"] == [2] * 10
    assert scenario["elapsed"] < 5.0, f"scenario took {scenario['elapsed']:.2f}s"
    _announce("end-to-end scenario")


def test_double_spend(authority_key, truststore):
    for repetition in range(20):
        (envelope,) = v.issue_coupon_batch(
            authority_key, "Springfield", "1B", [("", "Teacher", False)], 1
        )
        ledger = v.RedemptionLedger()
        barrier = threading.Barrier(100)

        def attempt():
            barrier.wait()
            try:
                v.check_in(envelope, truststore, ledger, {"1B"})
                return "ok"
            except AlreadyRedeemed:
                return "dup"

        with ThreadPoolExecutor(max_workers=100) as pool:
            outcomes = [f.result() for f in [pool.submit(attempt) for _ in range(100)]]
        assert outcomes.count("ok") == 1, f"repetition {repetition}"
        assert outcomes.count("dup") == 99, f"repetition {repetition}"
    _announce("double-spend")


def _short_envelopes(authority_key, clinic_key, truststore):
    ledger = v.RedemptionLedger()
    (coupon_env,) = v.issue_coupon_batch(authority_key, "S", "1", [("", "T", False)], 1)
    coupon = v.check_in(coupon_env, truststore, ledger, {"1"})
    badge_env, passkey_env = v.administer_first_dose(
        coupon,
        v.PII("A", "2000-01-01"),
        v.DoseInfo("P", 1, "2021-01-01", "L"),
        clinic_key,
        "C",
        "L",
        "2021-01-01T00:00:00Z",
        ledger,
    )
    _, status_env = v.administer_second_dose(
        badge_env,
        passkey_env,
        v.DoseInfo("P", 2, "2021-01-29", "L"),
        truststore,
        clinic_key,
        ledger,
    )
    return {
        v.CardKind.COUPON: (coupon_env, v.Role.AUTHORITY),
        v.CardKind.BADGE: (badge_env, v.Role.CLINIC),
        v.CardKind.STATUS: (status_env, v.Role.CLINIC),
        v.CardKind.PASSKEY: (passkey_env, v.Role.CLINIC),
    }


def test_tamper_suite(authority_key, clinic_key, truststore):
    envelopes = _short_envelopes(authority_key, clinic_key, truststore)
    for kind, (envelope, role) in envelopes.items():
        raw = cardcodec.encode_envelope(envelope)
        assert len(raw) <= 256, f"{kind.name} envelope unexpectedly large: {len(raw)}"
        # the pristine envelope verifies
        truststore.verify_envelope(cardcodec.decode_envelope(raw), role, kind)
        for byte_index in range(len(raw)):
            for bit in range(8):
                corrupted = bytearray(raw)
                corrupted[byte_index] ^= 1 << bit
                with pytest.raises(ProtocolError):
                    truststore.verify_envelope(
                        cardcodec.decode_envelope(bytes(corrupted)), role, kind
                    )
    _announce("tamper suite")


def test_binding_suite(authority_key, clinic_key, truststore):
    count = 100
    ledger = v.RedemptionLedger()
    batch = v.issue_coupon_batch(
        authority_key, "Springfield", "1B", [("", "Teacher", False)] * count, count
    )
    badges, passkeys, names = [], [], []
    for i, coupon_env in enumerate(batch):
        coupon = v.check_in(coupon_env, truststore, ledger, {"1B"})
        name = f"Bindingfolk Zv{i}met"
        badge_env, passkey_env = v.administer_first_dose(
            coupon,
            v.PII(name, "1970-01-01"),
            v.DoseInfo("Pfizer", 1, "2021-01-01", f"L{i}"),
            clinic_key,
            "Clinic",
            "Springfield",
            "2021-01-01T00:00:00Z",
            ledger,
        )
        badges.append(badge_env)
        passkeys.append(passkey_env)
        names.append(name)

    mismatches = 0
    for i in range(count):
        for j in range(count):
            if i == j:
                result = v.disclose_full(badges[i], passkeys[j], truststore)
                assert result.name == names[i]
            else:
                with pytest.raises(CommitmentMismatch):
                    v.disclose_full(badges[i], passkeys[j], truststore)
                mismatches += 1
    assert mismatches == count * (count - 1)
    _announce("binding suite")


def test_anonymity_grep(scenario):
    ledger_bytes = scenario["ledger_path"].read_bytes()
    registry_bytes = scenario["registry_path"].read_bytes()
    log_bytes = "\n".join(scenario["log_lines"]).encode()
    haystacks = {
        "ledger": ledger_bytes,
        "registry": registry_bytes,
        "gateway log": log_bytes,
    }
    for person in scenario["people"]:
        needles = {
            "name": person["name"].encode(),
            "dob": person["dob"].encode(),
            "passkey key": person["passkey_key"],
            "passkey key hex": person["passkey_key"].hex().encode(),
            "salt": person["passkey_salt"],
            "salt hex": person["passkey_salt"].hex().encode(),
        }
        for where, haystack in haystacks.items():
            for what, needle in needles.items():
                assert needle not in haystack, f"{what} leaked into {where}"
    # the records themselves did make it in, keyed by pseudonym
    for person in scenario["people"]:
        assert person["coupon_id"].encode() in registry_bytes
        assert person["coupon_id"].encode() in ledger_bytes
    _announce("anonymity grep")


def test_codec_fuzz(authority_key, clinic_key, truststore):
    rng = random.Random(0xC0DEC)
    base45ish = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ $%*+-./:"
    everything = base45ish + "abcdefghijklmnopqrstuvwxyz~!@#äö☃"
    outcomes = {"ok": 0, "BadPrefix": 0, "BadBase45": 0, "MalformedPayload": 0}
    for _ in range(10_000):
        mode = rng.random()
        alphabet = base45ish if mode < 0.6 else everything
        body = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 200)))
        text = ("SPC1:" + body) if mode < 0.8 else body
        try:
            v.from_card_text(text)
            outcomes["ok"] += 1
        except (BadPrefix, BadBase45, MalformedPayload) as exc:
            outcomes[type(exc).__name__] += 1
    assert sum(outcomes.values()) == 10_000
    assert outcomes["ok"] == 0  # random strings never parse to a signed envelope
    assert min(outcomes["BadPrefix"], outcomes["BadBase45"], outcomes["MalformedPayload"]) > 0

    # round-trips on genuine cards of all four kinds are identities
    for envelope, _ in _short_envelopes(authority_key, clinic_key, truststore).values():
        assert v.from_card_text(v.to_card_text(envelope)) == envelope
    _announce("codec fuzz")


def test_aggregate_conservation():
    rng = random.Random(10_000)
    registry = v.Registry()
    accepted = []
    for _ in range(10_000):
        row = {
            "pseudo_id": f"{rng.randrange(4000):032x}",
            "city": rng.choice(["Springfield", "Shelbyville", "Ogdenville", "Capital City"]),
            "phase": rng.choice(["1A", "1B", "2", "3"]),
            "manufacturer": rng.choice(["Pfizer", "Moderna", "Novavax"]),
            "dose_number": rng.choice([1, 2]),
            "date": "2021-01-01",
        }
        try:
            registry.submit_record(v.RegistryRecord(**row))
            accepted.append(row)
        except v.ProtocolError:
            pass
    assert len(accepted) < 10_000  # the id pool guarantees duplicate doses
    assert registry.record_count() == len(accepted)
    for dimension in ("city", "phase", "manufacturer", "dose_number"):
        expected = ref_count_by(accepted, dimension)
        got = {view.value: view.count for view in registry.aggregate(dimension)}
        assert got == expected
        assert sum(got.values()) == len(accepted)
    _announce("aggregate conservation")


def test_key_amnesia(tmp_path, authority_key, clinic_key, truststore):
    ledger_path = tmp_path / "ledger.log"
    trust_path = tmp_path / "trust.txt"
    keystore_path = tmp_path / "clinic.keys"
    truststore.save(trust_path)
    save_keypair(keystore_path, v.Role.CLINIC, clinic_key)
    ledger = v.RedemptionLedger(ledger_path)
    (coupon_env,) = v.issue_coupon_batch(
        authority_key, "Springfield", "1B", [("", "Teacher", False)], 1
    )
    coupon = v.check_in(coupon_env, truststore, ledger, {"1B"})
    _, passkey_env = v.administer_first_dose(
        coupon,
        v.PII("Amnesia Checkperson", "1970-01-01"),
        v.DoseInfo("Pfizer", 1, "2021-01-01", "EL1"),
        clinic_key,
        "Clinic",
        "Springfield",
        "2021-01-01T00:00:00Z",
        ledger,
    )
    passkey = passkey_env.message
    clinic_state = b"|".join(
        [
            ledger_path.read_bytes(),
            trust_path.read_bytes(),
            keystore_path.read_bytes(),
            repr(ledger.states()).encode(),
        ]
    )
    for secret in (passkey.key.bytes, passkey.salt.bytes):
        assert secret not in clinic_state
        assert secret.hex().encode() not in clinic_state
    _announce("key amnesia")
