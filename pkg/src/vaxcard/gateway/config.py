"""Gateway configuration and keystore files.

Config files are flat key=value lines (comments with #). The environment
variable VAXCARD_CONFIG points at the config file when --config is not
given. Keystores hold one signing key per file as
`role,key_id_hex,seed_hex`; they stay on the operator's disk and never
travel over the wire.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from ..authority import Role
from ..cryptokit import SigningKeyPair

CONFIG_ENV_VAR = "VAXCARD_CONFIG"

DEFAULT_LISTEN = "127.0.0.1:8590"


@dataclass
class GatewayConfig:
    listen_address: str = DEFAULT_LISTEN
    keystore_path: str = "clinic.keys"
    ledger_path: str = "ledger.log"
    registry_path: str = "registry.ndjson"
    truststore_path: str = "truststore.txt"
    active_phases: list[str] = field(default_factory=list)

    @property
    def host(self) -> str:
        host, _, _ = self.listen_address.rpartition(":")
        return host

    @property
    def port(self) -> int:
        _, _, port = self.listen_address.rpartition(":")
        return int(port)


def load_config(path: str | Path) -> GatewayConfig:
    values: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    known = set(GatewayConfig.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = dict(values)
    if "active_phases" in kwargs:
        kwargs["active_phases"] = [
            p.strip() for p in kwargs["active_phases"].split(",") if p.strip()
        ]
    return GatewayConfig(**kwargs)


def config_from_env() -> GatewayConfig:
    path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        raise ValueError(f"set {CONFIG_ENV_VAR} or pass --config")
    return load_config(path)


def save_keypair(path: str | Path, role: Role, key: SigningKeyPair) -> None:
    Path(path).write_text(
        f"{role.value},{key.key_id.hex()},{key.secret.hex()}\n", encoding="utf-8"
    )


def load_keypair(path: str | Path) -> tuple[Role, SigningKeyPair]:
    line = Path(path).read_text(encoding="utf-8").strip()
    role_name, key_id_hex, seed_hex = line.split(",")
    key = SigningKeyPair.from_seed(bytes.fromhex(seed_hex))
    if key.key_id.hex() != key_id_hex:
        raise ValueError(f"keystore {path} is corrupt: key_id mismatch")
    return Role(role_name), key
