"""
Configuration for the Hecke pair toolkit - handles environment-based settings
"""
import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(name)
    return int(value) if value not in (None, '') else default


def _env_float(name: str, default: float) -> float:
    value = os.environ.get(name)
    return float(value) if value not in (None, '') else default


class Config:
    """Base configuration"""

    # Enumeration budgets
    MAX_BALL = _env_int('HECKE_MAX_BALL', 200_000)
    MAX_ORBIT = _env_int('HECKE_MAX_ORBIT', 10_000)
    MAX_RADIUS = _env_int('HECKE_MAX_RADIUS', 6)

    # Numerical tolerance for kernel certification
    TOL = _env_float('HECKE_TOL', 1e-9)

    # Ball-table cache
    CACHE_DIR = os.environ.get('HECKE_CACHE_DIR') or '.hecke_cache'
    CACHE = os.environ.get('HECKE_CACHE', 'true')

    LOG_LEVEL = os.environ.get('HECKE_LOG_LEVEL', 'WARNING').upper()

    @property
    def cache_enabled(self) -> bool:
        """Check if ball tables should be cached on disk"""
        return self.CACHE.lower() == 'true'

    @property
    def cache_path(self) -> Path:
        """Get the cache directory as a Path"""
        return Path(self.CACHE_DIR)


config = Config()
