"""Run configuration: defaults, strict JSON file, then command-line overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    lam: float = 0.5
    k: int = 5
    stage1_n: int = 50
    thoughts_l: int = 5
    temperature: float = 0.7
    chunk_ns: int = 256
    embedder: str = "hash"
    dense_dim: int = 256
    endpoint: Optional[str] = None
    chat_model: Optional[str] = None
    embedding_model: Optional[str] = None
    transport: str = "replay"
    fixtures: Optional[str] = None
    max_in_flight: int = 4
    timeout: float = 60.0
    error_db: Optional[str] = None
    index: Optional[str] = None
    dataset: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must be in [0, 1], got {self.lam}")
        for name in ("k", "stage1_n", "thoughts_l", "max_in_flight"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.k > self.stage1_n:
            raise ConfigError(f"k={self.k} exceeds stage1_n={self.stage1_n}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError("temperature must be in [0, 2]")
        if self.chunk_ns < 8:
            raise ConfigError("chunk_ns must be >= 8")
        if self.dense_dim < 8:
            raise ConfigError("dense_dim must be >= 8")
        if self.embedder not in ("hash", "remote"):
            raise ConfigError("embedder must be 'hash' or 'remote'")
        if self.transport not in ("live", "replay", "record"):
            raise ConfigError("transport must be 'live', 'replay' or 'record'")

    def with_overrides(self, **overrides: Any) -> "Config":
        """Apply overrides whose value is not None."""
        given = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(given) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **given)

    def to_json_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


# JSON uses "lambda"; the attribute is ``lam``.
_JSON_TO_ATTR = {"lambda": "lam"}
_INT_KEYS = {"k", "stage1_n", "thoughts_l", "chunk_ns", "dense_dim", "max_in_flight"}
_FLOAT_KEYS = {"lam", "temperature", "timeout"}


def config_from_dict(data: Dict[str, Any], base: Config = Config()) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    names = {f.name for f in fields(Config)}
    mapped = {}
    for key, value in data.items():
        attr = _JSON_TO_ATTR.get(key, key)
        if attr not in names or key == "lam":
            raise ConfigError(f"unknown config key {key!r}")
        if attr in _INT_KEYS and (isinstance(value, bool) or not isinstance(value, int)):
            raise ConfigError(f"{key} must be an integer")
        if attr in _FLOAT_KEYS and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ConfigError(f"{key} must be a number")
        mapped[attr] = value
    try:
        return replace(base, **mapped)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: Optional[Union[str, Path]]) -> Config:
    if path is None:
        return Config()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)
