"""Card message schemas and their deterministic wire encodings.

Every card kind has a fixed schema order, so equal messages always encode
to byte-identical strings and signatures are reproducible across
implementations. Layout rules:

  * message bytes start with a version byte (1) and a kind byte;
  * strings are UTF-8 with a 4-byte big-endian length prefix;
  * integers are 4-byte big-endian;
  * keys, salts, commitments, and nonces are raw fixed-width;
  * ciphertexts carry a 4-byte big-endian length prefix.

The printable card text is `SPC1:` followed by Base45 of the canonical
envelope bytes:

    version(1) | kind(1) | msg_len(4 BE) | msg_bytes | signer_key_id(8) | signature(64)

Base45 is used because the QR alphanumeric mode charset is exactly the
Base45 alphabet.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import date, datetime, timezone

from . import cryptokit
from .cryptokit import Commitment, Salt, SealedBox, SigningKeyPair, SymmetricKey
from .errors import BadBase45, BadPrefix, FieldTooLong, MalformedPayload

PROTOCOL_VERSION = 1
CARD_TEXT_PREFIX = "SPC1:"
COUPON_ID_LEN = 16
MAX_STRING_BYTES = 0xFFFF


class CardKind(enum.IntEnum):
    COUPON = 1
    BADGE = 2
    STATUS = 3
    PASSKEY = 4


def _require_hex_id(value: str) -> None:
    if len(value) != 2 * COUPON_ID_LEN:
        raise ValueError("coupon_id must be 32 hex chars")
    try:
        bytes.fromhex(value)
    except ValueError:
        raise ValueError("coupon_id must be hex") from None
    if value != value.lower():
        raise ValueError("coupon_id must be lowercase hex")


def _require_iso_date(value: str, what: str) -> None:
    try:
        date.fromisoformat(value)
    except ValueError:
        raise ValueError(f"{what} must be an ISO-8601 date") from None


def normalize_date(value: str) -> str:
    """Accept ISO YYYY-MM-DD or US-style M/D/YYYY; return ISO."""
    try:
        return date.fromisoformat(value).isoformat()
    except ValueError:
        pass
    parts = value.split("/")
    if len(parts) == 3:
        try:
            month, day, year = (int(p) for p in parts)
            return date(year, month, day).isoformat()
        except ValueError:
            pass
    raise ValueError(f"unrecognized date: {value!r}")


def to_utc_iso(value: datetime | str) -> str:
    """Normalize a timestamp to UTC ISO-8601 with a Z suffix."""
    if isinstance(value, str):
        raw = value[:-1] + "+00:00" if value.endswith("Z") else value
        value = datetime.fromisoformat(raw)
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    value = value.astimezone(timezone.utc).replace(tzinfo=None)
    return value.isoformat(timespec="seconds") + "Z"


@dataclass
class PII:
    name: str
    dob: str
    sex: str | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("name must be non-empty")
        _require_iso_date(self.dob, "dob")


@dataclass
class DoseInfo:
    manufacturer: str
    dose_number: int
    date: str
    lot: str

    def __post_init__(self) -> None:
        if self.dose_number not in (1, 2):
            raise ValueError("dose_number must be 1 or 2")
        _require_iso_date(self.date, "dose date")


@dataclass
class ClinicDetails:
    """Plaintext sealed into a badge: where and when the dose was given."""

    clinic_name: str
    location: str
    timestamp: str

    def __post_init__(self) -> None:
        self.timestamp = to_utc_iso(self.timestamp)


@dataclass
class CouponMessage:
    coupon_id: str
    number: int
    total: int
    city: str
    phase: str
    age_band: str
    job: str
    comorbid: bool

    def __post_init__(self) -> None:
        _require_hex_id(self.coupon_id)
        if not 1 <= self.number <= self.total:
            raise ValueError("need 1 <= number <= total")


@dataclass
class BadgeMessage:
    coupon_id: str
    doses: list[DoseInfo]
    passkey_commitment: Commitment
    sealed_details: SealedBox

    def __post_init__(self) -> None:
        _require_hex_id(self.coupon_id)
        self.doses = list(self.doses)
        if [d.dose_number for d in self.doses] not in ([1], [1, 2]):
            raise ValueError("doses must be [1] or [1, 2]")


@dataclass
class StatusMessage:
    doses_received: int
    passkey_commitment: Commitment

    def __post_init__(self) -> None:
        if self.doses_received not in (0, 1, 2):
            raise ValueError("doses_received must be 0, 1, or 2")


@dataclass
class PasskeyCard:
    """Decentralized PII holder; physical possession operationalizes consent."""

    key: SymmetricKey
    salt: Salt
    sealed_pii: SealedBox


CardMessage = CouponMessage | BadgeMessage | StatusMessage | PasskeyCard

MESSAGE_TYPES: dict[CardKind, type] = {
    CardKind.COUPON: CouponMessage,
    CardKind.BADGE: BadgeMessage,
    CardKind.STATUS: StatusMessage,
    CardKind.PASSKEY: PasskeyCard,
}

_KIND_OF_TYPE = {t: k for k, t in MESSAGE_TYPES.items()}


@dataclass
class Envelope:
    """The certificate form: a card message plus the signature over it."""

    version: int
    kind: CardKind
    message: CardMessage
    signer_key_id: bytes
    signature: bytes

    def __post_init__(self) -> None:
        if self.version != PROTOCOL_VERSION:
            raise ValueError(f"unsupported version {self.version}")
        if type(self.message) is not MESSAGE_TYPES[self.kind]:
            raise ValueError("message type does not match envelope kind")
        if len(self.signer_key_id) != cryptokit.KEY_ID_LEN:
            raise ValueError("signer_key_id must be 8 bytes")
        if len(self.signature) != cryptokit.SIGNATURE_LEN:
            raise ValueError("signature must be 64 bytes")


# ---------------------------------------------------------------------------
# Primitive writers / reader
# ---------------------------------------------------------------------------


class _Writer:
    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, value: int) -> None:
        self._parts.append(bytes([value]))

    def u32(self, value: int) -> None:
        self._parts.append(value.to_bytes(4, "big"))

    def string(self, value: str) -> None:
        raw = value.encode("utf-8")
        if len(raw) > MAX_STRING_BYTES:
            raise FieldTooLong(f"string field of {len(raw)} bytes exceeds {MAX_STRING_BYTES}")
        self.u32(len(raw))
        self._parts.append(raw)

    def fixed(self, value: bytes) -> None:
        self._parts.append(value)

    def varbytes(self, value: bytes) -> None:
        self.u32(len(value))
        self._parts.append(value)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class _Reader:
    """Bounds-checked reader; every structural problem is MalformedPayload."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise MalformedPayload("truncated payload")
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def string(self) -> str:
        raw = self.take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedPayload("invalid UTF-8 in string field") from None

    def varbytes(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> None:
        if self._pos != len(self._data):
            raise MalformedPayload("trailing bytes after payload")


# ---------------------------------------------------------------------------
# Canonical message encoding
# ---------------------------------------------------------------------------


def _encode_sealed(w: _Writer, box: SealedBox) -> None:
    w.fixed(box.nonce)
    w.varbytes(box.ciphertext)


def _decode_sealed(r: _Reader) -> SealedBox:
    nonce = r.take(cryptokit.NONCE_LEN)
    ciphertext = r.varbytes()
    if len(ciphertext) < cryptokit.TAG_LEN:
        raise MalformedPayload("ciphertext shorter than the authentication tag")
    return SealedBox(nonce=nonce, ciphertext=ciphertext)


def canonical_encode(message: CardMessage) -> bytes:
    """Deterministic bytes for a card message; equal messages encode equal."""
    kind = _KIND_OF_TYPE.get(type(message))
    if kind is None:
        raise TypeError(f"not a card message: {type(message).__name__}")
    w = _Writer()
    w.u8(PROTOCOL_VERSION)
    w.u8(kind)
    if isinstance(message, CouponMessage):
        w.fixed(bytes.fromhex(message.coupon_id))
        w.u32(message.number)
        w.u32(message.total)
        w.string(message.city)
        w.string(message.phase)
        w.string(message.age_band)
        w.string(message.job)
        w.u8(1 if message.comorbid else 0)
    elif isinstance(message, BadgeMessage):
        w.fixed(bytes.fromhex(message.coupon_id))
        w.u32(len(message.doses))
        for dose in message.doses:
            w.string(dose.manufacturer)
            w.u32(dose.dose_number)
            w.string(dose.date)
            w.string(dose.lot)
        w.fixed(message.passkey_commitment.digest)
        _encode_sealed(w, message.sealed_details)
    elif isinstance(message, StatusMessage):
        w.u32(message.doses_received)
        w.fixed(message.passkey_commitment.digest)
    else:
        w.fixed(message.key.bytes)
        w.fixed(message.salt.bytes)
        _encode_sealed(w, message.sealed_pii)
    return w.getvalue()


def canonical_decode(kind: CardKind, data: bytes) -> CardMessage:
    """Inverse of canonical_encode; strict about version, kind, and length."""
    r = _Reader(data)
    if r.u8() != PROTOCOL_VERSION:
        raise MalformedPayload("unsupported version byte")
    if r.u8() != kind:
        raise MalformedPayload("kind byte does not match expected kind")
    try:
        if kind == CardKind.COUPON:
            message: CardMessage = CouponMessage(
                coupon_id=r.take(COUPON_ID_LEN).hex(),
                number=r.u32(),
                total=r.u32(),
                city=r.string(),
                phase=r.string(),
                age_band=r.string(),
                job=r.string(),
                comorbid=_decode_bool(r.u8()),
            )
        elif kind == CardKind.BADGE:
            coupon_id = r.take(COUPON_ID_LEN).hex()
            doses = [
                DoseInfo(
                    manufacturer=r.string(),
                    dose_number=r.u32(),
                    date=r.string(),
                    lot=r.string(),
                )
                for _ in range(_decode_count(r.u32()))
            ]
            message = BadgeMessage(
                coupon_id=coupon_id,
                doses=doses,
                passkey_commitment=Commitment(r.take(cryptokit.COMMITMENT_LEN)),
                sealed_details=_decode_sealed(r),
            )
        elif kind == CardKind.STATUS:
            message = StatusMessage(
                doses_received=r.u32(),
                passkey_commitment=Commitment(r.take(cryptokit.COMMITMENT_LEN)),
            )
        elif kind == CardKind.PASSKEY:
            message = PasskeyCard(
                key=SymmetricKey(r.take(cryptokit.KEY_LEN)),
                salt=Salt(r.take(cryptokit.SALT_LEN)),
                sealed_pii=_decode_sealed(r),
            )
        else:
            raise MalformedPayload("unknown card kind")
    except ValueError as exc:
        raise MalformedPayload(str(exc)) from None
    r.done()
    return message


def _decode_bool(value: int) -> bool:
    if value not in (0, 1):
        raise MalformedPayload("boolean byte must be 0 or 1")
    return value == 1


def _decode_count(value: int) -> int:
    if not 1 <= value <= 2:
        raise MalformedPayload("dose count must be 1 or 2")
    return value


# ---------------------------------------------------------------------------
# Sealed plaintext payloads (not card messages themselves)
# ---------------------------------------------------------------------------


def encode_pii(pii: PII) -> bytes:
    w = _Writer()
    w.string(pii.name)
    w.string(pii.dob)
    if pii.sex is None:
        w.u8(0)
    else:
        w.u8(1)
        w.string(pii.sex)
    return w.getvalue()


def decode_pii(data: bytes) -> PII:
    r = _Reader(data)
    name = r.string()
    dob = r.string()
    sex = r.string() if _decode_bool(r.u8()) else None
    r.done()
    try:
        return PII(name=name, dob=dob, sex=sex)
    except ValueError as exc:
        raise MalformedPayload(str(exc)) from None


def encode_clinic_details(details: ClinicDetails) -> bytes:
    w = _Writer()
    w.string(details.clinic_name)
    w.string(details.location)
    w.string(details.timestamp)
    return w.getvalue()


def decode_clinic_details(data: bytes) -> ClinicDetails:
    r = _Reader(data)
    try:
        details = ClinicDetails(
            clinic_name=r.string(), location=r.string(), timestamp=r.string()
        )
    except ValueError as exc:
        raise MalformedPayload(str(exc)) from None
    r.done()
    return details


# ---------------------------------------------------------------------------
# Envelope encoding and signing
# ---------------------------------------------------------------------------


def encode_envelope(envelope: Envelope) -> bytes:
    message_bytes = canonical_encode(envelope.message)
    w = _Writer()
    w.u8(envelope.version)
    w.u8(envelope.kind)
    w.varbytes(message_bytes)
    w.fixed(envelope.signer_key_id)
    w.fixed(envelope.signature)
    return w.getvalue()


def decode_envelope(data: bytes) -> Envelope:
    r = _Reader(data)
    version = r.u8()
    if version != PROTOCOL_VERSION:
        raise MalformedPayload("unsupported version byte")
    kind_byte = r.u8()
    try:
        kind = CardKind(kind_byte)
    except ValueError:
        raise MalformedPayload(f"unknown kind byte {kind_byte}") from None
    message_bytes = r.varbytes()
    signer_key_id = r.take(cryptokit.KEY_ID_LEN)
    signature = r.take(cryptokit.SIGNATURE_LEN)
    r.done()
    message = canonical_decode(kind, message_bytes)
    return Envelope(
        version=version,
        kind=kind,
        message=message,
        signer_key_id=signer_key_id,
        signature=signature,
    )


def sign_envelope(message: CardMessage, key: SigningKeyPair) -> Envelope:
    """Build the certificate: sign the canonical message bytes."""
    kind = _KIND_OF_TYPE[type(message)]
    signature = cryptokit.sign(key, canonical_encode(message))
    return Envelope(
        version=PROTOCOL_VERSION,
        kind=kind,
        message=message,
        signer_key_id=key.key_id,
        signature=signature,
    )


def verify_envelope(envelope: Envelope, public: bytes) -> bool:
    return cryptokit.verify(
        public, canonical_encode(envelope.message), envelope.signature
    )


# ---------------------------------------------------------------------------
# Base45 and card text
# ---------------------------------------------------------------------------

_B45_ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ $%*+-./:"
_B45_INDEX = {c: i for i, c in enumerate(_B45_ALPHABET)}


def base45_encode(data: bytes) -> str:
    chars: list[str] = []
    full_pairs = len(data) // 2
    for i in range(full_pairs):
        n = int.from_bytes(data[2 * i : 2 * i + 2], "big")
        n, c0 = divmod(n, 45)
        e, d0 = divmod(n, 45)
        chars += [_B45_ALPHABET[c0], _B45_ALPHABET[d0], _B45_ALPHABET[e]]
    if len(data) % 2:
        d, c = divmod(data[-1], 45)
        chars += [_B45_ALPHABET[c], _B45_ALPHABET[d]]
    return "".join(chars)


def base45_decode(text: str) -> bytes:
    if len(text) % 3 == 1:
        raise BadBase45("dangling trailing character")
    try:
        digits = [_B45_INDEX[c] for c in text]
    except KeyError as exc:
        raise BadBase45(f"character {exc.args[0]!r} not in Base45 alphabet") from None
    out = bytearray()
    for i in range(0, len(digits) - len(digits) % 3, 3):
        n = digits[i] + 45 * digits[i + 1] + 2025 * digits[i + 2]
        if n > 0xFFFF:
            raise BadBase45("triple decodes above 0xFFFF")
        out += n.to_bytes(2, "big")
    if len(digits) % 3 == 2:
        n = digits[-2] + 45 * digits[-1]
        if n > 0xFF:
            raise BadBase45("pair decodes above 0xFF")
        out.append(n)
    return bytes(out)


def to_card_text(envelope: Envelope) -> str:
    """The string printed as a QR code."""
    return CARD_TEXT_PREFIX + base45_encode(encode_envelope(envelope))


def from_card_text(text: str) -> Envelope:
    """Parse card text back into an envelope.

    The signature is NOT verified here; callers check it against a trust
    store. Never raises anything but BadPrefix, BadBase45, or
    MalformedPayload, however hostile the input.
    """
    if not text.startswith(CARD_TEXT_PREFIX):
        raise BadPrefix(f"card text must start with {CARD_TEXT_PREFIX!r}")
    return decode_envelope(base45_decode(text[len(CARD_TEXT_PREFIX) :]))
