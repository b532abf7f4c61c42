"""Run configuration: TOML or JSON files with path-qualified validation errors."""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BUILTIN = "builtin:"
PRESETS = ("lobeke_sse", "lobeke_sparsity", "lobeke_convergence", "random_lab")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key path."""


def load_config(path) -> dict:
    """Read a TOML (``.toml``) or JSON file, or a packaged preset ``preset:<name>``."""
    if isinstance(path, str) and path.startswith("preset:"):
        name = path.split(":", 1)[1]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
        text = resources.files("sgkit").joinpath(f"data/presets/{name}.toml").read_text()
        cfg = _parse(text, "toml", path)
        cfg.setdefault("_base_dir", None)
        return cfg
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: {exc.strerror}") from None
    kind = "json" if p.suffix.lower() == ".json" else "toml"
    cfg = _parse(text, kind, p)
    cfg["_base_dir"] = str(p.resolve().parent)
    return cfg


def _parse(text: str, kind: str, where) -> dict:
    try:
        data = json.loads(text) if kind == "json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: top level must be a table")
    return data


def resolve_path(cfg: dict, value: str):
    """``builtin:<file>`` names packaged data; other relative paths follow the config file."""
    if value.startswith(BUILTIN):
        return resources.files("sgkit").joinpath("data/" + value[len(BUILTIN):])
    p = Path(value)
    if not p.is_absolute() and cfg.get("_base_dir"):
        p = Path(cfg["_base_dir"]) / p
    return p


_MISSING = object()


class Section:
    """Typed accessor over one table that rejects unknown keys."""

    def __init__(self, data, where: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{where}: expected a table")
        self.data = data
        self.where = where
        self.used: set[str] = set()

    def _get(self, key, default):
        self.used.add(key)
        if key not in self.data:
            if default is _MISSING:
                raise ConfigError(f"{self.where}.{key}: required key is missing")
            return default, False
        return self.data[key], True

    def int(self, key, default=_MISSING, minimum=None):
        v, given = self._get(key, default)
        if not given:
            return v
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self.where}.{key}: expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            raise ConfigError(f"{self.where}.{key}: must be >= {minimum}, got {v}")
        return v

    def float(self, key, default=_MISSING, minimum=None):
        v, given = self._get(key, default)
        if not given:
            return v
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self.where}.{key}: expected a number, got {v!r}")
        if minimum is not None and v < minimum:
            raise ConfigError(f"{self.where}.{key}: must be >= {minimum}, got {v}")
        return float(v)

    def bool(self, key, default=_MISSING):
        v, given = self._get(key, default)
        if given and not isinstance(v, bool):
            raise ConfigError(f"{self.where}.{key}: expected true or false, got {v!r}")
        return v

    def str(self, key, default=_MISSING, choices=None):
        v, given = self._get(key, default)
        if not given:
            return v
        if not isinstance(v, str):
            raise ConfigError(f"{self.where}.{key}: expected a string, got {v!r}")
        if choices is not None and v not in choices:
            raise ConfigError(f"{self.where}.{key}: must be one of {', '.join(choices)}, got {v!r}")
        return v

    def point(self, key, default=_MISSING):
        v, given = self._get(key, default)
        return _point(v, f"{self.where}.{key}") if given else v

    def points(self, key, default=_MISSING, length=None):
        v, given = self._get(key, default)
        if not given:
            return v
        if not isinstance(v, list) or (length is not None and len(v) != length):
            need = f"{length} " if length is not None else ""
            raise ConfigError(f"{self.where}.{key}: expected a list of {need}[lat, lon] pairs")
        return [_point(p, f"{self.where}.{key}[{i}]") for i, p in enumerate(v)]

    def numbers(self, key, default=_MISSING, length=None):
        v, given = self._get(key, default)
        if not given:
            return v
        if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
            raise ConfigError(f"{self.where}.{key}: expected a list of numbers")
        if length is not None and len(v) != length:
            raise ConfigError(f"{self.where}.{key}: expected {length} numbers, got {len(v)}")
        return [float(x) for x in v]

    def strings(self, key, default=_MISSING, choices=None):
        v, given = self._get(key, default)
        if not given:
            return v
        if not isinstance(v, list) or any(not isinstance(x, str) for x in v):
            raise ConfigError(f"{self.where}.{key}: expected a list of strings")
        for x in v:
            if choices is not None and x not in choices:
                raise ConfigError(f"{self.where}.{key}: {x!r} is not one of {', '.join(choices)}")
        return list(v)

    def raw(self, key, default=_MISSING):
        return self._get(key, default)[0]

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigError(f"{self.where}.{extra[0]}: unknown key")


def _point(v, where):
    if not isinstance(v, list) or len(v) != 2 or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
        raise ConfigError(f"{where}: expected a [lat, lon] pair, got {v!r}")
    return float(v[0]), float(v[1])


def section(cfg: dict, key: str, required: bool = True) -> Section | None:
    if key not in cfg:
        if required:
            raise ConfigError(f"{key}: required table is missing")
        return None
    return Section(cfg[key], key)
