"""Settings and run configuration.

Defaults are read from the environment (a ``.env`` file in the working
directory is loaded first), an optional dotenv-style config file is layered
on top, and explicit command-line flags win over both.
"""
import logging
import os
import platform
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values, find_dotenv, load_dotenv

from src import __version__

DEFAULT_PRECISION_CAP = 16384
DEFAULT_SIEVE_LIMIT = 2_000_000

ENV_PREFIX = "APPROX_"


@dataclass(frozen=True)
class Settings:
    """Process-wide defaults; every engine accepts overrides."""

    precision_cap: int = DEFAULT_PRECISION_CAP
    workers: int = 1
    sieve_limit: int = DEFAULT_SIEVE_LIMIT
    log_level: str = "WARNING"

    @classmethod
    def from_mapping(cls, values: Mapping[str, Optional[str]], base: Optional["Settings"] = None) -> "Settings":
        """Build settings from APPROX_* keys, keeping ``base`` for anything missing"""
        current = base or cls(workers=os.cpu_count() or 1)
        updates: Dict[str, Any] = {}
        for name, caster in (("precision_cap", int), ("workers", int), ("sieve_limit", int), ("log_level", str)):
            raw = values.get(ENV_PREFIX + name.upper())
            if raw is None or raw == "":
                continue
            updates[name] = caster(raw)
        settings = replace(current, **updates)
        if settings.precision_cap < 64:
            raise ValueError("APPROX_PRECISION_CAP must be at least 64 bits")
        if settings.workers < 1:
            raise ValueError("APPROX_WORKERS must be positive")
        return settings


def load_settings(config_file: Optional[str] = None) -> Settings:
    """Environment (plus .env) first, then the optional config file"""
    load_dotenv(find_dotenv(usecwd=True), override=False)
    settings = Settings.from_mapping(os.environ)
    if config_file:
        settings = Settings.from_mapping(dotenv_values(config_file), base=settings)
    return settings


_active: Optional[Settings] = None


def get_settings() -> Settings:
    global _active
    if _active is None:
        _active = load_settings()
    return _active


def use_settings(settings: Settings) -> None:
    """Install resolved settings (config file and CLI flags applied) for this process"""
    global _active
    _active = settings


def default_precision_cap() -> int:
    return get_settings().precision_cap


def setup_logging(level: str = "WARNING") -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@dataclass
class RunConfig:
    """Everything a CLI run resolved, echoed verbatim into the manifest."""

    command: str
    subcommand: Optional[str] = None
    xi: Optional[str] = None
    constraint: Optional[str] = None
    psi: Optional[str] = None
    seed: Optional[int] = None
    precision_cap: int = DEFAULT_PRECISION_CAP
    workers: int = 1
    out: Optional[str] = None
    csv: Optional[str] = None
    svg: Optional[str] = None
    html: Optional[str] = None
    format: str = "json"
    parameters: Dict[str, Any] = field(default_factory=dict)

    def to_manifest(self) -> Dict[str, Any]:
        """Config echo plus the versions needed to regenerate the artefacts"""
        return {
            "config": asdict(self),
            "versions": package_versions(),
        }


def package_versions() -> Dict[str, str]:
    import mpmath
    import numpy
    import pandas
    import plotly

    return {
        "approx": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "pandas": pandas.__version__,
        "mpmath": mpmath.__version__,
        "plotly": plotly.__version__,
    }
