"""
Settings: defaults for limits, tolerances and the cache directory, read from the environment.
"""
import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

from src.core.errors import ParseError


def _read(name: str, cast, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw)
    except ValueError as e:
        raise ParseError(f"environment variable {name}={raw!r} is not a valid {cast.__name__}") from e


@dataclass(frozen=True)
class Settings:
    nc_limit: int = 16
    tol: float = 1e-9
    rank_rtol: float = 1e-8
    cache_dir: Optional[str] = None
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls) -> "Settings":
        """Loads ``.env`` (if any) and overlays ``WREATHCAT_*`` variables on the defaults."""
        load_dotenv()
        return cls(
            nc_limit=_read("WREATHCAT_NC_LIMIT", int, cls.nc_limit),
            tol=_read("WREATHCAT_TOL", float, cls.tol),
            rank_rtol=_read("WREATHCAT_RANK_RTOL", float, cls.rank_rtol),
            cache_dir=_read("WREATHCAT_CACHE_DIR", str, None),
            log_level=_read("WREATHCAT_LOG_LEVEL", str, cls.log_level),
        )


DEFAULTS = Settings()
