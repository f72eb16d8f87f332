"""Protocol error hierarchy shared by every module.

Each error class name doubles as the machine-readable error code: the CLI
prints it, the HTTP gateway returns it in the JSON body, and
ERROR_HTTP_STATUS maps it to exactly one HTTP status. Tests assert the
table covers every concrete error class.
"""

from __future__ import annotations


class ProtocolError(Exception):
    """Base class for every card-protocol failure."""

    @property
    def code(self) -> str:
        return type(self).__name__


# card text / codec
class FieldTooLong(ProtocolError):
    pass


class MalformedPayload(ProtocolError):
    pass


class BadPrefix(ProtocolError):
    pass


class BadBase45(ProtocolError):
    pass


# crypto
class RandomnessUnavailable(ProtocolError):
    pass


class DecryptFailed(ProtocolError):
    pass


# trust store
class RoleConflict(ProtocolError):
    pass


class UnknownKey(ProtocolError):
    pass


class WrongRole(ProtocolError):
    pass


class BadSignature(ProtocolError):
    pass


class WrongKind(ProtocolError):
    pass


# issuance
class AttrCountMismatch(ProtocolError):
    pass


# clinic workflow
class PhaseNotActive(ProtocolError):
    pass


class AlreadyRedeemed(ProtocolError):
    pass


class NotCheckedIn(ProtocolError):
    pass


class NotDosed1(ProtocolError):
    pass


class WrongDoseNumber(ProtocolError):
    pass


class ManufacturerMismatch(ProtocolError):
    pass


class IdentityMismatch(ProtocolError):
    pass


# verifier
class CommitmentMismatch(ProtocolError):
    pass


# registry
class PIIFieldPresent(ProtocolError):
    pass


class DuplicateDose(ProtocolError):
    pass


class UnknownPseudoId(ProtocolError):
    pass


# One HTTP status per error code. 400: the request itself is unusable;
# 401: a signature or trust check failed; 409: a redemption/registration
# conflict; 422: the cards are readable but the protocol state forbids
# the operation.
ERROR_HTTP_STATUS: dict[str, int] = {
    "FieldTooLong": 400,
    "MalformedPayload": 400,
    "BadPrefix": 400,
    "BadBase45": 400,
    "PIIFieldPresent": 400,
    "BadSignature": 401,
    "UnknownKey": 401,
    "WrongRole": 401,
    "AlreadyRedeemed": 409,
    "DuplicateDose": 409,
    "RoleConflict": 409,
    "PhaseNotActive": 422,
    "NotCheckedIn": 422,
    "NotDosed1": 422,
    "WrongDoseNumber": 422,
    "ManufacturerMismatch": 422,
    "IdentityMismatch": 422,
    "CommitmentMismatch": 422,
    "DecryptFailed": 422,
    "WrongKind": 422,
    "UnknownPseudoId": 422,
    "AttrCountMismatch": 422,
    "RandomnessUnavailable": 500,
}
