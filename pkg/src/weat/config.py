"""Service and CLI configuration.

Settings come from an optional JSON config file, overridden by environment
variables:

    WEAT_LISTEN        host:port for the service (default 127.0.0.1:8787)
    WEAT_STORAGE_ROOT  storage directory (default ./weat-data)
    WEAT_PROVIDER      provider kind: mock, live, or replay
    WEAT_FIXTURES      fixture directory for mock/replay and live recording
    WEAT_LLM_ENDPOINT  chat-completion endpoint base URL (live)
    WEAT_LLM_KEY       bearer credential read by the live provider
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import WeatError
from .providers import DEFAULT_CREDENTIALS_VAR, ProviderSpec


class BadConfig(WeatError):
    pass


@dataclass
class ServiceSettings:
    """Resolved runtime settings for the authoring service."""

    storage_root: Path = Path("weat-data")
    host: str = "127.0.0.1"
    port: int = 8787
    provider: dict = field(default_factory=lambda: {"kind": "mock"})
    static_dir: Path | None = None

    def provider_spec(self, overrides: dict | None = None) -> ProviderSpec:
        """Build a ProviderSpec from the configured defaults plus overrides."""
        merged = dict(self.provider)
        merged.update(overrides or {})
        return provider_spec_from_dict(merged)


def provider_spec_from_dict(payload: dict) -> ProviderSpec:
    """Construct a ProviderSpec from a config/request mapping."""
    try:
        return ProviderSpec(
            kind=payload.get("kind", "mock"),
            endpoint=payload.get("endpoint"),
            credentials=payload.get("credentials", DEFAULT_CREDENTIALS_VAR),
            fixture_path=payload.get("fixture_path"),
            timeout_seconds=float(payload.get("timeout_seconds", 60.0)),
        )
    except (TypeError, ValueError) as exc:
        raise BadConfig(f"bad provider settings: {exc}") from exc


def load_settings(
    config_path: str | Path | None = None, env: dict | None = None
) -> ServiceSettings:
    """Resolve settings from a config file plus environment overrides."""
    env = os.environ if env is None else env
    payload: dict = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise BadConfig(f"config file not found: {path}")
        try:
            payload = json.loads(path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise BadConfig(f"config file {path} is not valid JSON: {exc}") from exc

    settings = ServiceSettings()
    if "storage_root" in payload:
        settings.storage_root = Path(payload["storage_root"])
    if "listen" in payload:
        settings.host, settings.port = _split_listen(payload["listen"])
    if "provider" in payload:
        if not isinstance(payload["provider"], dict):
            raise BadConfig("provider section must be an object")
        settings.provider = dict(payload["provider"])
    if "static_dir" in payload:
        settings.static_dir = Path(payload["static_dir"])

    if env.get("WEAT_STORAGE_ROOT"):
        settings.storage_root = Path(env["WEAT_STORAGE_ROOT"])
    if env.get("WEAT_LISTEN"):
        settings.host, settings.port = _split_listen(env["WEAT_LISTEN"])
    if env.get("WEAT_PROVIDER"):
        settings.provider["kind"] = env["WEAT_PROVIDER"]
    if env.get("WEAT_FIXTURES"):
        settings.provider["fixture_path"] = env["WEAT_FIXTURES"]
    if env.get("WEAT_LLM_ENDPOINT"):
        settings.provider["endpoint"] = env["WEAT_LLM_ENDPOINT"]
    return settings


def _split_listen(listen: str) -> tuple[str, int]:
    host, _, port = str(listen).rpartition(":")
    if not host or not port.isdigit():
        raise BadConfig(f"listen address must be host:port, got {listen!r}")
    return host, int(port)
