"""Settings for the polarimetry simulator.

Defaults live in ``polarimetry_config.yaml`` at the project root. Anything the
file leaves out falls back to the values below. Seeds are deliberately not
configurable here: every seeded run takes its seed from the command line.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from errors import ConfigError

logger = logging.getLogger(__name__)

__version__ = "0.1.0"

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "polarimetry_config.yaml"

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class SweepSettings:
    samples: int = 1024
    refine_tol: float = 1e-10


@dataclass(frozen=True)
class AnalyzerSettings:
    samples: int = 512


@dataclass(frozen=True)
class Tolerances:
    """Clamp window for extraction and the fullrun regression threshold."""

    extraction: float = 1e-9
    fullrun: float = 1e-8


@dataclass(frozen=True)
class HardwareSettings:
    """Guide-field hardware, thermal neutrons by default (SI units)."""

    mu: float = 9.6623651e-27
    B: float = 1.0e-3
    v: float = 2200.0
    n: int = 1


@dataclass(frozen=True)
class Settings:
    log_level: str = "INFO"
    sweep: SweepSettings = field(default_factory=SweepSettings)
    analyzer: AnalyzerSettings = field(default_factory=AnalyzerSettings)
    tolerances: Tolerances = field(default_factory=Tolerances)
    hardware: HardwareSettings = field(default_factory=HardwareSettings)


def _section(raw: dict[str, Any], name: str, cls: type) -> Any:
    """Build one settings section, rejecting unknown keys."""
    values = raw.get(name) or {}
    if not isinstance(values, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    known = set(cls.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {', '.join(sorted(unknown))}")
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(f"bad section '{name}': {e}") from e


def validate_settings(settings: Settings) -> Settings:
    """Check ranges of a settings object.

    Returns:
        The same settings, for chaining

    """
    if settings.log_level.upper() not in LOG_LEVELS:
        raise ConfigError(f"log_level must be one of {LOG_LEVELS}, got {settings.log_level!r}")
    if settings.sweep.samples < 16:
        raise ConfigError("sweep.samples must be at least 16")
    if settings.sweep.refine_tol <= 0:
        raise ConfigError("sweep.refine_tol must be positive")
    if settings.analyzer.samples < 16:
        raise ConfigError("analyzer.samples must be at least 16")
    tol = settings.tolerances
    if min(tol.extraction, tol.fullrun) <= 0:
        raise ConfigError("all tolerances must be positive")
    hw = settings.hardware
    if min(hw.mu, hw.B, hw.v) <= 0 or hw.n < 1:
        raise ConfigError("hardware values must be strictly positive")
    return settings


def load_settings(path: str | Path | None = None) -> Settings:
    """Load settings from a YAML file.

    Args:
        path: Settings file; the project default when None

    Returns:
        Validated settings

    """
    config_path = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    if not config_path.exists():
        if path is not None:
            raise ConfigError(f"settings file not found: {config_path}")
        logger.warning("Settings file %s not found, using built-in defaults", config_path)
        return Settings()

    try:
        raw = yaml.safe_load(config_path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {config_path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{config_path} must contain a mapping at top level")
    if "seed" in raw:
        raise ConfigError("seeds are not configurable; pass --seed on the command line")

    settings = Settings(
        log_level=str(raw.get("log_level", "INFO")).upper(),
        sweep=_section(raw, "sweep", SweepSettings),
        analyzer=_section(raw, "analyzer", AnalyzerSettings),
        tolerances=_section(raw, "tolerances", Tolerances),
        hardware=_section(raw, "hardware", HardwareSettings),
    )
    logger.debug("Loaded settings from %s", config_path)
    return validate_settings(settings)
