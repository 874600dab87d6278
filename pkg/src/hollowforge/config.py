"""Run configuration: fabrication parameters plus pipeline settings, loaded from TOML."""
from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .supportfree import FabricationParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PARAM_KEYS = tuple(f.name for f in dataclasses.fields(FabricationParams))
COVER_MODES = ("adaptive", "uniform")


@dataclass(frozen=True)
class Config:
    params: FabricationParams = field(default_factory=FabricationParams)
    spacing: float | None = None
    cover: str = "adaptive"
    cover_radius: float | None = None
    max_ellipses: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.cover not in COVER_MODES:
            raise ConfigError(f"cover must be one of {COVER_MODES}, got {self.cover!r}")
        for name in ("spacing", "cover_radius"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if not isinstance(self.max_ellipses, int) or isinstance(self.max_ellipses, bool) or self.max_ellipses < 0:
            raise ConfigError(f"max_ellipses must be a non-negative integer, got {self.max_ellipses!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")

    @property
    def max_count(self) -> int | None:
        """Ellipse cap for the packer; 0 means unlimited."""
        return self.max_ellipses or None

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = set(PARAM_KEYS) | {f.name for f in dataclasses.fields(cls)} - {"params"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
        pk = {k: data[k] for k in PARAM_KEYS if k in data}
        for k, v in pk.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{k} must be a number, got {v!r}")
        rest = {k: v for k, v in data.items() if k not in PARAM_KEYS}
        return cls(params=FabricationParams(**{k: float(v) for k, v in pk.items()}), **rest)

    @classmethod
    def load(cls, path) -> "Config":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def replace(self, **kw) -> "Config":
        """Copy with overrides; fabrication parameter names are routed to ``params``."""
        pk = {k: kw.pop(k) for k in list(kw) if k in PARAM_KEYS}
        params = dataclasses.replace(self.params, **pk) if pk else self.params
        return dataclasses.replace(self, params=params, **kw)

    def to_dict(self) -> dict:
        out = self.params.to_dict()
        out.update(spacing=self.spacing, cover=self.cover, cover_radius=self.cover_radius,
                   max_ellipses=self.max_ellipses, seed=self.seed)
        return out


def default_config_text() -> str:
    """The default configuration as a TOML document."""
    c = Config()
    lines = []
    for k, v in c.to_dict().items():
        if v is None:
            lines.append(f"# {k} = (derived)")
        elif isinstance(v, str):
            lines.append(f'{k} = "{v}"')
        else:
            lines.append(f"{k} = {v!r}")
    return "\n".join(lines) + "\n"


def load_config(path=None) -> Config:
    return Config() if path is None else Config.load(Path(path))
