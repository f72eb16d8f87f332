"""Operational surface: CLI for every role and the HTTP service behind the scanner UI."""

from .config import GatewayConfig, load_config, load_keypair, save_keypair
from .server import GatewayServer, serve

__all__ = [
    "GatewayConfig",
    "GatewayServer",
    "load_config",
    "load_keypair",
    "save_keypair",
    "serve",
]
