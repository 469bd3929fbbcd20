"""Service configuration: TOML file plus environment overrides.

Environment variables named ``MEDCOSMOS_<SECTION>_<KEY>`` override file
values (e.g. ``MEDCOSMOS_SERVER_PORT=9001``).
"""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..relations import DEFAULT_DIMENSION, DEFAULT_HASH_SEED

ENV_PREFIX = "MEDCOSMOS"


class ConfigError(Exception):
    pass


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    static_dir: str | None = None
    corpus_dir: str = "./corpora"
    lexicon_path: str | None = None
    embedding_provider: str = "hashing"
    embedding_dimension: int = DEFAULT_DIMENSION
    embedding_seed: int = DEFAULT_HASH_SEED
    embedding_endpoint: str | None = None
    topics_k: int = 4
    topics_seed: int = 0
    boundary_radius: float = 1.0
    unit_force: float = 1.0
    padding_scale: float = 0.02
    star_radius_scale: float = 0.02
    tolerance_scale: float = 1e-3
    max_iters: int = 2000
    default_theta: float = 0.5
    default_max_subgraph_size: int = 10

    def validate(self) -> "ServiceConfig":
        positive = (
            "port",
            "embedding_dimension",
            "topics_k",
            "boundary_radius",
            "unit_force",
            "padding_scale",
            "star_radius_scale",
            "tolerance_scale",
            "max_iters",
            "default_max_subgraph_size",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.default_theta <= 1.0:
            raise ConfigError("default_theta must be in [0, 1]")
        if self.embedding_provider not in ("hashing", "external"):
            raise ConfigError(f"unknown embedding provider: {self.embedding_provider!r}")
        if self.embedding_provider == "external" and not self.embedding_endpoint:
            raise ConfigError("embedding_provider 'external' needs embedding_endpoint")
        return self


# (section, key) in the TOML file -> ServiceConfig field
_KEY_MAP: dict[tuple[str, str], str] = {
    ("server", "host"): "host",
    ("server", "port"): "port",
    ("server", "static_dir"): "static_dir",
    ("corpus", "dir"): "corpus_dir",
    ("corpus", "lexicon"): "lexicon_path",
    ("embedding", "provider"): "embedding_provider",
    ("embedding", "dimension"): "embedding_dimension",
    ("embedding", "seed"): "embedding_seed",
    ("embedding", "endpoint"): "embedding_endpoint",
    ("topics", "k"): "topics_k",
    ("topics", "seed"): "topics_seed",
    ("layout", "boundary_radius"): "boundary_radius",
    ("layout", "unit_force"): "unit_force",
    ("layout", "padding_scale"): "padding_scale",
    ("layout", "star_radius_scale"): "star_radius_scale",
    ("layout", "tolerance_scale"): "tolerance_scale",
    ("layout", "max_iters"): "max_iters",
    ("defaults", "theta"): "default_theta",
    ("defaults", "max_subgraph_size"): "default_max_subgraph_size",
}


def _coerce(raw: str, template: object) -> object:
    if isinstance(template, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(raw, 0)
    if isinstance(template, float):
        return float(raw)
    return raw


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None) -> ServiceConfig:
    config = ServiceConfig()
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        for (section, key), attr in _KEY_MAP.items():
            if section in data and key in data[section]:
                setattr(config, attr, data[section][key])

    env = env if env is not None else dict(os.environ)
    defaults = {f.name: getattr(ServiceConfig(), f.name) for f in fields(ServiceConfig)}
    for (section, key), attr in _KEY_MAP.items():
        var = f"{ENV_PREFIX}_{section.upper()}_{key.upper()}"
        if var in env:
            template = defaults[attr]
            setattr(config, attr, _coerce(env[var], template if template is not None else ""))
    return config.validate()
