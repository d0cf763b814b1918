"""Flat ``key = value`` configuration files.

Lines are ``key = value`` in SI units; ``#`` starts a comment. Keys map onto
dataclass fields (radar parameters, dataset sizing, ...).
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Mapping

from rdclass.errors import ConfigError


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def load_config(path: str | Path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def _coerce(value: Any, target: Any, key: str) -> Any:
    if not isinstance(value, str):
        return value
    if isinstance(target, str) and "|" in target:
        parts = [p.strip() for p in target.split("|")]
        if "None" in parts and value.lower() in ("none", ""):
            return None
        target = next(p for p in parts if p != "None")
    try:
        if target in (bool, "bool"):
            lowered = value.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if target in (int, "int"):
            return int(value)
        if target in (float, "float"):
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


def build(cls, values: Mapping[str, Any]):
    """Instantiate dataclass ``cls`` from the keys of ``values`` it knows about."""
    kwargs = {}
    for field in dataclasses.fields(cls):
        if field.name in values:
            kwargs[field.name] = _coerce(values[field.name], field.type, field.name)
    return cls(**kwargs)


def build_many(values: Mapping[str, Any], *classes):
    """Split one flat mapping across several dataclasses; unknown keys are an error."""
    known = {f.name for cls in classes for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return tuple(build(cls, values) for cls in classes)
