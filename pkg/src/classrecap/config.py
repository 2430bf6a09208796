"""Service configuration: file (JSON or TOML) plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Optional

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

ENV_PREFIX = "CLASSRECAP_"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    storage_path: str = "classrecap.db"
    gap_s: int = 3
    coverage_quorum: int = 30
    volatility_floor: float = 0.01
    replay_heat_factor: float = 2.0

    def cache_key(self) -> tuple:
        """Summary caches are keyed on the knobs that change cut-lists."""
        return (self.gap_s, self.coverage_quorum, self.volatility_floor, self.replay_heat_factor)


def load_config(
    path: Optional[str | Path] = None, env: Optional[Mapping[str, str]] = None
) -> ServiceConfig:
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        path = Path(path)
        if path.suffix.lower() == ".toml":
            values.update(tomllib.loads(path.read_text(encoding="utf-8")))
        else:
            values.update(json.loads(path.read_text(encoding="utf-8")))

    config = ServiceConfig()
    for f in fields(ServiceConfig):
        raw = env.get(ENV_PREFIX + f.name.upper())
        if raw is None and f.name in values:
            raw = values[f.name]
        if raw is None:
            continue
        converter = {"int": int, "float": float, "str": str}[f.type]
        setattr(config, f.name, converter(raw))
    return config
