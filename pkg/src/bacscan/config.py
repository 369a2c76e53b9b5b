"""Scanner configuration files.

A config file is YAML with up to six sections; every section and every key
is optional, and anything unknown is rejected with a dotted-path diagnostic
so a typo like ``dispatch.rate_limi`` fails loudly instead of being ignored.
Values land in one flat ScanConfig dataclass that the CLI overlays with its
own flags (flags win).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .model import ConfigError

_SCHEMA: dict[str, dict[str, type | tuple[type, ...]]] = {
    "store": {
        "path": str,
    },
    "scope": {
        "allowed_hosts": list,
        "denied_path_prefixes": list,
        "max_requests": int,
    },
    "dispatch": {
        "per_host_rate": (int, float),
        "max_in_flight": int,
        "timeout_ms": int,
        "retries": int,
    },
    "detector": {
        "threshold": (int, float),
        "max_auto_len": int,
    },
    "iams": {
        "enabled": list,
        "id_window": int,
        "budget_per_base": int,
    },
    "service": {
        "bind": str,
        "port": int,
    },
}


@dataclass
class ScanConfig:
    """Flattened settings; defaults match the library defaults."""

    store_path: str = "bacscan.db"
    allowed_hosts: tuple[str, ...] = ()
    denied_path_prefixes: tuple[str, ...] = ()
    max_requests: int | None = None
    per_host_rate: float = 5.0
    max_in_flight: int = 4
    timeout_ms: int = 10_000
    retries: int = 1
    threshold: float = 0.9
    max_auto_len: int = 100_000
    enabled_iams: tuple[str, ...] = ()
    id_window: int = 2
    budget_per_base: int = 200
    service_bind: str = "127.0.0.1"
    service_port: int = 8180
    overridden: set[str] = field(default_factory=set)

    def was_set(self, name: str) -> bool:
        return name in self.overridden


_KEY_TO_FIELD = {
    ("store", "path"): "store_path",
    ("scope", "allowed_hosts"): "allowed_hosts",
    ("scope", "denied_path_prefixes"): "denied_path_prefixes",
    ("scope", "max_requests"): "max_requests",
    ("dispatch", "per_host_rate"): "per_host_rate",
    ("dispatch", "max_in_flight"): "max_in_flight",
    ("dispatch", "timeout_ms"): "timeout_ms",
    ("dispatch", "retries"): "retries",
    ("detector", "threshold"): "threshold",
    ("detector", "max_auto_len"): "max_auto_len",
    ("iams", "enabled"): "enabled_iams",
    ("iams", "id_window"): "id_window",
    ("iams", "budget_per_base"): "budget_per_base",
    ("service", "bind"): "service_bind",
    ("service", "port"): "service_port",
}


def _check_type(path: str, value, expected) -> None:
    if isinstance(expected, tuple):
        ok = isinstance(value, expected) and not isinstance(value, bool)
    elif expected is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif expected is list:
        ok = isinstance(value, list) and all(isinstance(v, str) for v in value)
    else:
        ok = isinstance(value, expected)
    if not ok:
        want = "list of strings" if expected is list else getattr(expected, "__name__", str(expected))
        raise ConfigError(f"{path}: expected {want}, got {type(value).__name__}")


def parse_config(data: dict) -> ScanConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"config root: expected a mapping, got {type(data).__name__}")
    config = ScanConfig()
    for section, body in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"{section}: unknown section (known: {', '.join(sorted(_SCHEMA))})")
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: expected a mapping, got {type(body).__name__}")
        for key, value in body.items():
            if key not in _SCHEMA[section]:
                known = ", ".join(sorted(_SCHEMA[section]))
                raise ConfigError(f"{section}.{key}: unknown key (known: {known})")
            _check_type(f"{section}.{key}", value, _SCHEMA[section][key])
            name = _KEY_TO_FIELD[(section, key)]
            if isinstance(value, list):
                value = tuple(value)
            setattr(config, name, value)
            config.overridden.add(name)
    _validate_ranges(config)
    return config


def _validate_ranges(config: ScanConfig) -> None:
    checks = (
        (config.per_host_rate > 0, "dispatch.per_host_rate must be positive"),
        (config.max_in_flight >= 1, "dispatch.max_in_flight must be at least 1"),
        (config.timeout_ms >= 1, "dispatch.timeout_ms must be at least 1"),
        (config.retries >= 0, "dispatch.retries must not be negative"),
        (0.0 < config.threshold <= 1.0, "detector.threshold must be in (0, 1]"),
        (config.max_auto_len >= 1, "detector.max_auto_len must be at least 1"),
        (config.id_window >= 1, "iams.id_window must be at least 1"),
        (config.budget_per_base >= 1, "iams.budget_per_base must be at least 1"),
        (config.max_requests is None or config.max_requests >= 1,
         "scope.max_requests must be at least 1"),
        (1 <= config.service_port <= 65535, "service.port must be a port number"),
    )
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)


def load_config(path: str | Path) -> ScanConfig:
    """Parse a YAML config file. Raises ConfigError with a dotted path for
    unknown keys, wrong types, or out-of-range values."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if data is None:
        data = {}
    return parse_config(data)


def field_names() -> tuple[str, ...]:
    return tuple(f.name for f in fields(ScanConfig) if f.name != "overridden")
