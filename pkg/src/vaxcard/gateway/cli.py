"""Command-line surface for every role.

Card texts move through files or stdout; results print as key=value
lines. Exit codes: 0 success, 1 protocol error (the error code is printed
to stderr), 2 usage error (argparse).
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

from .. import cardcodec, clinic, verifier
from ..authority import Role, TrustStore, issue_coupon_batch
from ..cardcodec import CardKind, DoseInfo, PII, normalize_date
from ..clinic import RedemptionLedger
from ..cryptokit import generate_signing_keypair
from ..errors import ProtocolError
from ..registry import Registry, RegistryRecord, SymptomReport
from .config import config_from_env, load_config, load_keypair, save_keypair
from .server import serve


def _read_card(path: str) -> cardcodec.Envelope:
    return cardcodec.from_card_text(Path(path).read_text(encoding="utf-8").strip())


def _emit_card(envelope: cardcodec.Envelope, out_path: str | None, label: str) -> None:
    text = cardcodec.to_card_text(envelope)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
        print(f"{label}_file={out_path}")
    else:
        print(f"{label}_card_text={text}")


def _load_ledger(path: str) -> RedemptionLedger:
    return RedemptionLedger.load(path)


def _dose_from_args(args: argparse.Namespace, dose_number: int) -> DoseInfo:
    return DoseInfo(
        manufacturer=args.manufacturer,
        dose_number=dose_number,
        date=normalize_date(args.date),
        lot=args.lot,
    )


# -- subcommand implementations ---------------------------------------------


def _cmd_keys_gen(args: argparse.Namespace) -> int:
    key = generate_signing_keypair()
    save_keypair(args.out, Role(args.role), key)
    print(f"key_id={key.key_id.hex()}")
    print(f"public={key.public.hex()}")
    return 0


def _cmd_keys_register(args: argparse.Namespace) -> int:
    path = Path(args.truststore)
    store = TrustStore.load(path) if path.exists() else TrustStore()
    if args.from_keystore:
        role, key = load_keypair(args.from_keystore)
        public = key.public
    else:
        role = Role(args.role)
        public = bytes.fromhex(args.public)
    store.register(role, public)
    store.save(path)
    print(f"registered={role.value},{public.hex()}")
    return 0


def _cmd_authority_issue(args: argparse.Namespace) -> int:
    role, key = load_keypair(args.keystore)
    if args.attrs_file:
        attrs = []
        for line in Path(args.attrs_file).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            age_band, job, comorbid = line.split(",")
            attrs.append((age_band, job, comorbid.lower() in ("1", "true", "yes")))
        total = args.total if args.total is not None else len(attrs)
    else:
        if args.total is None:
            raise SystemExit("authority issue: need --total or --attrs-file")
        attrs = [(args.age_band, args.job, args.comorbid)] * args.total
        total = args.total
    envelopes = issue_coupon_batch(key, args.city, args.phase, attrs, total)
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for envelope in envelopes:
            assert isinstance(envelope.message, cardcodec.CouponMessage)
            name = f"coupon-{envelope.message.number:04d}.txt"
            (out_dir / name).write_text(
                cardcodec.to_card_text(envelope) + "\n", encoding="utf-8"
            )
        print(f"issued={total} out_dir={args.out_dir}")
    else:
        for envelope in envelopes:
            print(cardcodec.to_card_text(envelope))
    return 0


def _cmd_clinic_checkin(args: argparse.Namespace) -> int:
    store = TrustStore.load(args.truststore)
    ledger = _load_ledger(args.ledger)
    phases = {p.strip() for p in args.phases.split(",") if p.strip()}
    coupon = clinic.check_in(_read_card(args.coupon), store, ledger, phases)
    print(f"coupon_id={coupon.coupon_id}")
    print(f"number={coupon.number}")
    print(f"total={coupon.total}")
    print(f"city={coupon.city}")
    print(f"phase={coupon.phase}")
    print(f"age_band={coupon.age_band}")
    print(f"job={coupon.job}")
    print(f"comorbid={str(coupon.comorbid).lower()}")
    return 0


def _cmd_clinic_dose1(args: argparse.Namespace) -> int:
    store = TrustStore.load(args.truststore)
    _, key = load_keypair(args.keystore)
    ledger = _load_ledger(args.ledger)
    coupon = store.verify_envelope(
        _read_card(args.coupon), Role.AUTHORITY, CardKind.COUPON
    )
    assert isinstance(coupon, cardcodec.CouponMessage)
    pii = PII(name=args.name, dob=normalize_date(args.dob), sex=args.sex)
    timestamp = args.timestamp or datetime.now(timezone.utc).isoformat()
    badge_env, passkey_env = clinic.administer_first_dose(
        coupon,
        pii,
        _dose_from_args(args, 1),
        key,
        clinic_name=args.clinic_name,
        location=args.location,
        timestamp=cardcodec.to_utc_iso(timestamp),
        ledger=ledger,
    )
    print(f"coupon_id={coupon.coupon_id}")
    _emit_card(badge_env, args.badge_out, "badge")
    _emit_card(passkey_env, args.passkey_out, "passkey")
    return 0


def _cmd_clinic_dose2(args: argparse.Namespace) -> int:
    store = TrustStore.load(args.truststore)
    _, key = load_keypair(args.keystore)
    ledger = _load_ledger(args.ledger)
    badge_env, status_env = clinic.administer_second_dose(
        _read_card(args.badge),
        _read_card(args.passkey),
        _dose_from_args(args, 2),
        store,
        key,
        ledger,
    )
    _emit_card(badge_env, args.badge_out, "badge")
    _emit_card(status_env, args.status_out, "status")
    return 0


def _cmd_verify_status(args: argparse.Namespace) -> int:
    store = TrustStore.load(args.truststore)
    result = verifier.verify_status(_read_card(args.status), store)
    print(f"doses_received={result.doses_received}")
    return 0


def _cmd_verify_name(args: argparse.Namespace) -> int:
    store = TrustStore.load(args.truststore)
    result = verifier.disclose_name(
        _read_card(args.status), _read_card(args.passkey), args.coupon_id, store
    )
    print(f"doses_received={result.doses_received}")
    print(f"name={result.name}")
    return 0


def _cmd_verify_full(args: argparse.Namespace) -> int:
    store = TrustStore.load(args.truststore)
    result = verifier.disclose_full(
        _read_card(args.badge), _read_card(args.passkey), store
    )
    full = result.full
    assert full is not None
    print(f"doses_received={result.doses_received}")
    print(f"name={full.pii.name}")
    print(f"dob={full.pii.dob}")
    print(f"sex={full.pii.sex or ''}")
    for dose in full.doses:
        print(
            f"dose_{dose.dose_number}={dose.manufacturer},{dose.date},{dose.lot}"
        )
    print(f"clinic_name={full.details.clinic_name}")
    print(f"location={full.details.location}")
    print(f"timestamp={full.details.timestamp}")
    return 0


def _cmd_registry_submit(args: argparse.Namespace) -> int:
    registry = Registry.load(args.registry)
    registry.submit_record(
        RegistryRecord(
            pseudo_id=args.pseudo_id,
            city=args.city,
            phase=args.phase,
            manufacturer=args.manufacturer,
            dose_number=args.dose_number,
            date=normalize_date(args.date),
        )
    )
    print("accepted=true")
    return 0


def _cmd_registry_symptom(args: argparse.Namespace) -> int:
    registry = Registry.load(args.registry)
    registry.submit_symptom_report(
        SymptomReport(
            pseudo_id=args.pseudo_id,
            days_since_dose=args.days_since_dose,
            symptoms=[s.strip() for s in args.symptoms.split(",") if s.strip()],
            severity=args.severity,
        )
    )
    print("accepted=true")
    return 0


def _cmd_registry_aggregate(args: argparse.Namespace) -> int:
    registry = Registry.load(args.registry)
    for view in registry.aggregate(args.dimension):
        print(f"{view.value}={view.count}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import logging

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    config = load_config(args.config) if args.config else config_from_env()
    serve(config)
    return 0


# -- parser wiring -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vaxcard")
    top = parser.add_subparsers(dest="command", required=True)

    keys = top.add_parser("keys", help="signing key management")
    keys_sub = keys.add_subparsers(dest="subcommand", required=True)
    gen = keys_sub.add_parser("gen", help="generate a signing key")
    gen.add_argument("--role", choices=[r.value for r in Role], required=True)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_keys_gen)
    reg = keys_sub.add_parser("register", help="add a public key to a trust store")
    reg.add_argument("--truststore", required=True)
    reg.add_argument("--from-keystore")
    reg.add_argument("--role", choices=[r.value for r in Role])
    reg.add_argument("--public", help="32-byte public key as hex")
    reg.set_defaults(func=_cmd_keys_register)

    auth = top.add_parser("authority", help="coupon issuance")
    auth_sub = auth.add_subparsers(dest="subcommand", required=True)
    issue = auth_sub.add_parser("issue", help="sign a coupon batch")
    issue.add_argument("--keystore", required=True)
    issue.add_argument("--city", required=True)
    issue.add_argument("--phase", required=True)
    issue.add_argument("--total", type=int)
    issue.add_argument("--age-band", default="")
    issue.add_argument("--job", default="")
    issue.add_argument("--comorbid", action="store_true")
    issue.add_argument("--attrs-file", help="CSV of age_band,job,comorbid rows")
    issue.add_argument("--out-dir")
    issue.set_defaults(func=_cmd_authority_issue)

    cl = top.add_parser("clinic", help="vaccination site operations")
    cl_sub = cl.add_subparsers(dest="subcommand", required=True)
    checkin = cl_sub.add_parser("checkin", help="verify and redeem a coupon")
    checkin.add_argument("--coupon", required=True)
    checkin.add_argument("--truststore", required=True)
    checkin.add_argument("--ledger", required=True)
    checkin.add_argument("--phases", required=True, help="comma-separated active phases")
    checkin.set_defaults(func=_cmd_clinic_checkin)
    dose1 = cl_sub.add_parser("dose1", help="record dose 1; mint Badge and Passkey")
    dose1.add_argument("--coupon", required=True)
    dose1.add_argument("--truststore", required=True)
    dose1.add_argument("--keystore", required=True)
    dose1.add_argument("--ledger", required=True)
    dose1.add_argument("--name", required=True)
    dose1.add_argument("--dob", required=True)
    dose1.add_argument("--sex")
    dose1.add_argument("--manufacturer", required=True)
    dose1.add_argument("--date", required=True)
    dose1.add_argument("--lot", required=True)
    dose1.add_argument("--clinic-name", required=True)
    dose1.add_argument("--location", required=True)
    dose1.add_argument("--timestamp")
    dose1.add_argument("--badge-out")
    dose1.add_argument("--passkey-out")
    dose1.set_defaults(func=_cmd_clinic_dose1)
    dose2 = cl_sub.add_parser("dose2", help="record dose 2; reissue Badge, mint Status")
    dose2.add_argument("--badge", required=True)
    dose2.add_argument("--passkey", required=True)
    dose2.add_argument("--truststore", required=True)
    dose2.add_argument("--keystore", required=True)
    dose2.add_argument("--ledger", required=True)
    dose2.add_argument("--manufacturer", required=True)
    dose2.add_argument("--date", required=True)
    dose2.add_argument("--lot", required=True)
    dose2.add_argument("--badge-out")
    dose2.add_argument("--status-out")
    dose2.set_defaults(func=_cmd_clinic_dose2)

    ver = top.add_parser("verify", help="tiered verification")
    ver_sub = ver.add_subparsers(dest="subcommand", required=True)
    v_status = ver_sub.add_parser("status", help="dose count only")
    v_status.add_argument("--status", required=True)
    v_status.add_argument("--truststore", required=True)
    v_status.set_defaults(func=_cmd_verify_status)
    v_name = ver_sub.add_parser("name", help="decrypt the holder's name")
    v_name.add_argument("--status", required=True)
    v_name.add_argument("--passkey", required=True)
    v_name.add_argument("--coupon-id", required=True)
    v_name.add_argument("--truststore", required=True)
    v_name.set_defaults(func=_cmd_verify_name)
    v_full = ver_sub.add_parser("full", help="full record disclosure")
    v_full.add_argument("--badge", required=True)
    v_full.add_argument("--passkey", required=True)
    v_full.add_argument("--truststore", required=True)
    v_full.set_defaults(func=_cmd_verify_full)

    regy = top.add_parser("registry", help="anonymized record-keeping")
    regy_sub = regy.add_subparsers(dest="subcommand", required=True)
    submit = regy_sub.add_parser("submit", help="submit a dose record")
    submit.add_argument("--registry", required=True)
    submit.add_argument("--pseudo-id", required=True)
    submit.add_argument("--city", required=True)
    submit.add_argument("--phase", required=True)
    submit.add_argument("--manufacturer", required=True)
    submit.add_argument("--dose-number", type=int, required=True)
    submit.add_argument("--date", required=True)
    submit.set_defaults(func=_cmd_registry_submit)
    symptom = regy_sub.add_parser("symptom", help="submit a symptom self-report")
    symptom.add_argument("--registry", required=True)
    symptom.add_argument("--pseudo-id", required=True)
    symptom.add_argument("--days-since-dose", type=int, required=True)
    symptom.add_argument("--symptoms", required=True, help="comma-separated")
    symptom.add_argument("--severity", type=int, required=True)
    symptom.set_defaults(func=_cmd_registry_symptom)
    agg = regy_sub.add_parser("aggregate", help="population-level counts")
    agg.add_argument("--registry", required=True)
    agg.add_argument(
        "--dimension",
        required=True,
        choices=["city", "phase", "manufacturer", "dose_number"],
    )
    agg.set_defaults(func=_cmd_registry_aggregate)

    srv = top.add_parser("serve", help="run the HTTP gateway")
    srv.add_argument("--config", help="config file; defaults to $VAXCARD_CONFIG")
    srv.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProtocolError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
