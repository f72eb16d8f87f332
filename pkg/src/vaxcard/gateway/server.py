"""JSON-over-HTTP service backing the scanner console.

Card payloads always travel as `SPC1:` card-text strings, never as decoded
structures, so the signed envelope stays the sole unit of exchange. Every
protocol error maps to exactly one HTTP status via ERROR_HTTP_STATUS; the
body is {"error": <code>, "detail": <text>}.

A thread is spawned per connection; all ledger and registry mutations are
serialized behind those objects' own locks, which makes duplicate
check-ins race-free no matter how many scanners hit the service at once.

Request bodies are never logged: dose-1 bodies carry PII in the clear and
the access log must stay free of it.
"""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .. import cardcodec, clinic, verifier
from ..authority import Role, TrustStore
from ..cardcodec import DoseInfo, PII, normalize_date
from ..clinic import RedemptionLedger
from ..errors import ERROR_HTTP_STATUS, MalformedPayload, ProtocolError
from ..registry import DIMENSIONS, Registry, record_from_dict, symptom_from_dict
from .config import GatewayConfig, load_keypair

log = logging.getLogger("vaxcard.gateway")


def _require(body: dict, key: str, kind: type = str):
    value = body.get(key)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise MalformedPayload(f"body needs a {kind.__name__} field {key!r}")
    return value


def _parse_pii(body: dict) -> PII:
    obj = _require(body, "pii", dict)
    sex = obj.get("sex")
    if sex is not None and not isinstance(sex, str):
        raise MalformedPayload("pii.sex must be a string")
    try:
        return PII(
            name=_require(obj, "name"),
            dob=normalize_date(_require(obj, "dob")),
            sex=sex,
        )
    except ValueError as exc:
        raise MalformedPayload(f"bad pii: {exc}") from None


def _parse_dose(body: dict) -> DoseInfo:
    obj = _require(body, "dose", dict)
    try:
        return DoseInfo(
            manufacturer=_require(obj, "manufacturer"),
            dose_number=_require(obj, "dose_number", int),
            date=normalize_date(_require(obj, "date")),
            lot=_require(obj, "lot"),
        )
    except ValueError as exc:
        raise MalformedPayload(f"bad dose: {exc}") from None


class GatewayApp:
    """Protocol state plus one handler per endpoint; returns JSON dicts."""

    def __init__(self, config: GatewayConfig) -> None:
        self.config = config
        self.truststore = TrustStore.load(config.truststore_path)
        self.role, self.signing_key = load_keypair(config.keystore_path)
        self.ledger = RedemptionLedger.load(config.ledger_path)
        registry_path = Path(config.registry_path)
        self.registry = Registry.load(registry_path)
        self.active_phases = set(config.active_phases)

    # -- clinic ------------------------------------------------------------

    def handle_checkin(self, body: dict) -> dict:
        envelope = cardcodec.from_card_text(_require(body, "card_text"))
        coupon = clinic.check_in(
            envelope, self.truststore, self.ledger, self.active_phases
        )
        return {
            "coupon_id": coupon.coupon_id,
            "number": coupon.number,
            "total": coupon.total,
            "city": coupon.city,
            "phase": coupon.phase,
            "age_band": coupon.age_band,
            "job": coupon.job,
            "comorbid": coupon.comorbid,
        }

    def handle_dose1(self, body: dict) -> dict:
        envelope = cardcodec.from_card_text(_require(body, "card_text"))
        coupon = self.truststore.verify_envelope(
            envelope, Role.AUTHORITY, cardcodec.CardKind.COUPON
        )
        clinic_obj = _require(body, "clinic", dict)
        timestamp = clinic_obj.get(
            "timestamp", datetime.now(timezone.utc).isoformat()
        )
        if not isinstance(timestamp, str):
            raise MalformedPayload("clinic.timestamp must be a string")
        try:
            timestamp = cardcodec.to_utc_iso(timestamp)
        except ValueError as exc:
            raise MalformedPayload(f"bad clinic.timestamp: {exc}") from None
        badge_env, passkey_env = clinic.administer_first_dose(
            coupon,
            _parse_pii(body),
            _parse_dose(body),
            self.signing_key,
            clinic_name=_require(clinic_obj, "clinic_name"),
            location=_require(clinic_obj, "location"),
            timestamp=timestamp,
            ledger=self.ledger,
        )
        return {
            "badge_card_text": cardcodec.to_card_text(badge_env),
            "passkey_card_text": cardcodec.to_card_text(passkey_env),
        }

    def handle_dose2(self, body: dict) -> dict:
        badge_env = cardcodec.from_card_text(_require(body, "badge_card_text"))
        passkey_env = cardcodec.from_card_text(_require(body, "passkey_card_text"))
        new_badge, status = clinic.administer_second_dose(
            badge_env,
            passkey_env,
            _parse_dose(body),
            self.truststore,
            self.signing_key,
            self.ledger,
        )
        return {
            "badge_card_text": cardcodec.to_card_text(new_badge),
            "status_card_text": cardcodec.to_card_text(status),
        }

    # -- verifier ----------------------------------------------------------

    def handle_verify_status(self, body: dict) -> dict:
        envelope = cardcodec.from_card_text(_require(body, "card_text"))
        result = verifier.verify_status(envelope, self.truststore)
        return {"doses_received": result.doses_received}

    def handle_verify_name(self, body: dict) -> dict:
        status_env = cardcodec.from_card_text(_require(body, "status_card_text"))
        passkey_env = cardcodec.from_card_text(_require(body, "passkey_card_text"))
        result = verifier.disclose_name(
            status_env, passkey_env, _require(body, "coupon_id"), self.truststore
        )
        return {"doses_received": result.doses_received, "name": result.name}

    def handle_verify_full(self, body: dict) -> dict:
        badge_env = cardcodec.from_card_text(_require(body, "badge_card_text"))
        passkey_env = cardcodec.from_card_text(_require(body, "passkey_card_text"))
        result = verifier.disclose_full(badge_env, passkey_env, self.truststore)
        full = result.full
        assert full is not None
        return {
            "doses_received": result.doses_received,
            "name": result.name,
            "pii": {"name": full.pii.name, "dob": full.pii.dob, "sex": full.pii.sex},
            "doses": [
                {
                    "manufacturer": d.manufacturer,
                    "dose_number": d.dose_number,
                    "date": d.date,
                    "lot": d.lot,
                }
                for d in full.doses
            ],
            "clinic": {
                "clinic_name": full.details.clinic_name,
                "location": full.details.location,
                "timestamp": full.details.timestamp,
            },
        }

    # -- registry ----------------------------------------------------------

    def handle_registry_record(self, body: dict) -> dict:
        self.registry.submit_record(record_from_dict(body))
        return {"accepted": True}

    def handle_registry_symptom(self, body: dict) -> dict:
        self.registry.submit_symptom_report(symptom_from_dict(body))
        return {"accepted": True}

    def handle_aggregate(self, params: dict) -> dict:
        dimension = params.get("dimension", "")
        if dimension not in DIMENSIONS:
            raise MalformedPayload(f"dimension must be one of {DIMENSIONS}")
        groups = self.registry.aggregate(dimension)
        return {
            "dimension": dimension,
            "groups": [{"value": g.value, "count": g.count} for g in groups],
        }

    def handle_health(self, params: dict) -> dict:
        return {"status": "ok", "role": self.role.value}


_POST_ROUTES = {
    "/api/checkin": GatewayApp.handle_checkin,
    "/api/dose1": GatewayApp.handle_dose1,
    "/api/dose2": GatewayApp.handle_dose2,
    "/api/verify/status": GatewayApp.handle_verify_status,
    "/api/verify/name": GatewayApp.handle_verify_name,
    "/api/verify/full": GatewayApp.handle_verify_full,
    "/api/registry/record": GatewayApp.handle_registry_record,
    "/api/registry/symptom": GatewayApp.handle_registry_symptom,
}

_GET_ROUTES = {
    "/api/registry/aggregate": GatewayApp.handle_aggregate,
    "/api/health": GatewayApp.handle_health,
}


class _Handler(BaseHTTPRequestHandler):
    # self.server is the ThreadingHTTPServer; GatewayServer hangs the app on it

    protocol_version = "HTTP/1.1"

    def _send_json(self, status: int, payload: dict) -> None:
        raw = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(raw)

    def _run(self, handler, argument: dict) -> None:
        try:
            payload = handler(self.server.app, argument)
        except ProtocolError as exc:
            status = ERROR_HTTP_STATUS[exc.code]
            self._send_json(status, {"error": exc.code, "detail": str(exc)})
        except Exception:
            log.exception("unhandled error in %s", self.path)
            self._send_json(500, {"error": "InternalError"})
        else:
            self._send_json(200, payload)

    def do_POST(self) -> None:  # noqa: N802 (http.server naming)
        handler = _POST_ROUTES.get(urlparse(self.path).path)
        if handler is None:
            self._send_json(404, {"error": "NotFound"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
            if not isinstance(body, dict):
                raise ValueError("body must be a JSON object")
        except (ValueError, UnicodeDecodeError):
            self._send_json(400, {"error": "MalformedPayload", "detail": "bad JSON body"})
            return
        self._run(handler, body)

    def do_GET(self) -> None:  # noqa: N802
        url = urlparse(self.path)
        handler = _GET_ROUTES.get(url.path)
        if handler is None:
            self._send_json(404, {"error": "NotFound"})
            return
        params = {k: v[0] for k, v in parse_qs(url.query).items()}
        self._run(handler, params)

    def do_OPTIONS(self) -> None:  # noqa: N802
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def log_message(self, format: str, *args) -> None:
        # method, path, and status only; bodies never reach the log
        log.info("%s %s", self.address_string(), format % args)


class GatewayServer:
    """Bound server plus its app; start()/shutdown() for embedding in tests."""

    def __init__(self, config: GatewayConfig) -> None:
        self.app = GatewayApp(config)
        self._httpd = ThreadingHTTPServer((config.host, config.port), _Handler)
        self._httpd.app = self.app  # type: ignore[attr-defined]

    @property
    def address(self) -> tuple[str, int]:
        return self._httpd.server_address[0], self._httpd.server_address[1]

    def serve_forever(self) -> None:
        host, port = self.address
        log.info("listening on %s:%d", host, port)
        self._httpd.serve_forever()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()


def serve(config: GatewayConfig) -> None:
    server = GatewayServer(config)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
