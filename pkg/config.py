import os
from dataclasses import dataclass, fields, replace

from dotenv import load_dotenv

load_dotenv()

_ENV_PREFIX = "NLCS_"


@dataclass(frozen=True)
class Settings:
    """Runtime knobs. Every field can be set from the environment as NLCS_<FIELD>."""

    output_format: str = "json"
    start_dim: int = 32
    max_dim: int = 512
    tail_tolerance: float = 1e-14
    disk_limit: float = 0.95
    divergence_threshold: float = 1e8
    seed: int = 20050117
    grid_size: int = 50
    eigen_tol: float = 1e-8
    displacement_tol: float = 1e-8
    t_route_tol: float = 1e-10
    algebra_tol: float = 1e-12
    gk_tol: float = 1e-12
    action_tol: float = 1e-8
    manko_gap: float = 0.1
    quad_tol: float = 1e-8
    mandel_tol: float = 1e-10
    continuity_bound: float = 1e3

    @classmethod
    def from_env(cls) -> "Settings":
        values = {}
        for f in fields(cls):
            raw = os.getenv(_ENV_PREFIX + f.name.upper())
            if raw is None or raw == "":
                continue
            values[f.name] = _coerce(f.name, f.type, raw)
        return cls(**values)

    def with_overrides(self, overrides: dict) -> "Settings":
        known = {f.name: f.type for f in fields(self)}
        clean = {}
        for name, raw in overrides.items():
            if name not in known:
                raise KeyError(f"Unknown setting '{name}'")
            clean[name] = _coerce(name, known[name], raw) if isinstance(raw, str) else raw
        return replace(self, **clean)


def _coerce(name: str, kind, raw: str):
    kind = kind if isinstance(kind, str) else kind.__name__
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ValueError(f"Setting {name} expects {kind}, got '{raw}'")
    return raw


_settings = None


def get_settings() -> Settings:
    global _settings
    if _settings is None:
        _settings = Settings.from_env()
    return _settings


def use_settings(settings: Settings) -> Settings:
    global _settings
    _settings = settings
    return settings


def reset_settings():
    global _settings
    _settings = None
