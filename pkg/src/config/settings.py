from __future__ import annotations
from dataclasses import dataclass, field
import logging
import os
from typing import Optional, ClassVar

from dotenv import load_dotenv


def _env_bool(name: str, default: bool = False) -> bool:
    v = os.environ.get(name)
    if v is None:
        return default
    return v.strip().lower() in {"1", "true", "t", "yes", "y", "on"}


def _env_float(name: str, default: float, lo: float = float("-inf"), hi: float = float("inf")) -> float:
    """Values that do not parse or fall outside the open interval (lo, hi) give the default."""
    v = os.environ.get(name)
    if v is None:
        return default
    try:
        x = float(v)
    except (ValueError, TypeError):
        return default
    return x if lo < x < hi else default


def _env_int(name: str, default: int) -> int:
    v = os.environ.get(name)
    if v is None:
        return default
    try:
        return max(1, int(v))
    except (ValueError, TypeError):
        return default


@dataclass(frozen=True)
class Settings:
    # Outputs
    output_dir: Optional[str] = field(default=None)  # None: use the run config / cwd

    # Parallelism (sweeps over L, fit multistart)
    workers: int = field(default=4)

    # Spectral analysis
    min_prominence: float = field(default=0.02)

    # Logging
    log_level: str = field(default="INFO")

    # EventBus
    eventbus_enabled: bool = field(default=True)

    # Misc
    debug: bool = field(default_factory=lambda: _env_bool("DEBUG", False))

    # Singleton instance
    _instance: ClassVar[Optional["Settings"]] = None

    @classmethod
    def load(cls) -> "Settings":
        # .env never overrides variables already present in the environment
        load_dotenv(override=False)
        return cls(
            output_dir=os.environ.get("POLARITON_OUTPUT_DIR") or None,
            workers=_env_int("POLARITON_WORKERS", 4),
            min_prominence=_env_float("POLARITON_PROMINENCE", 0.02, lo=0.0, hi=1.0),
            log_level=os.environ.get("POLARITON_LOG_LEVEL", "INFO").upper(),
            eventbus_enabled=_env_bool("EVENTBUS_ENABLED", True),
            debug=_env_bool("DEBUG", False),
        )


def get_settings() -> Settings:
    if Settings._instance is None:
        Settings._instance = Settings.load()
    return Settings._instance


def reset_settings():
    """Reset settings singleton - useful for testing"""
    Settings._instance = None


def configure_logging(settings: Optional[Settings] = None) -> None:
    """Root logging setup; called by the CLI only, never by library code."""
    settings = settings or get_settings()
    level = logging.DEBUG if settings.debug else getattr(logging, settings.log_level, logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
